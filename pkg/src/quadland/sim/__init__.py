"""Scenario configuration, the closed-loop simulation, metrics and output files."""

from .config import (
    ConfigInvalid,
    ScenarioConfig,
    config_from_dict,
    load_config,
    load_preset,
    preset_names,
    preset_path,
)
from .io import TICK_COLUMNS, IoError, emit_outputs, read_summary, read_ticks
from .loop import SimulationDiverged, TickLog, run_scenario, touchdown_record
from .metrics import EmptyLog, SummaryMetrics, compute_metrics

__all__ = [
    "ConfigInvalid", "ScenarioConfig", "config_from_dict", "load_config", "load_preset", "preset_names",
    "preset_path", "TICK_COLUMNS", "IoError", "emit_outputs", "read_summary", "read_ticks",
    "SimulationDiverged", "TickLog", "run_scenario", "touchdown_record", "EmptyLog", "SummaryMetrics",
    "compute_metrics",
]

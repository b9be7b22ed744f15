"""Flight summary statistics computed from a tick log."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

KMH = 3.6


class EmptyLog(ValueError):
    pass


@dataclass(frozen=True)
class SummaryMetrics:
    flight_distance_m: float
    target_speed_kmh: float
    uav_max_speed_kmh: float
    uav_avg_speed_kmh: float
    mean_planning_time_ms: float
    replanning_count: int
    flight_time_s: float
    landed: bool
    landing_success: bool
    final_offset_m: float
    touchdown_speed_mps: float
    obstacle_density: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(logs, touchdown_tolerance: float = 0.3, max_touchdown_speed: float = 0.5,
                    obstacle_density: float = 0.0) -> SummaryMetrics:
    """Summarise a run.

    Distances and speeds come from truth states over the whole log (take-off
    to touchdown). The average speed is the time average of ``|v|``, so it
    never exceeds the maximum. Re-planning count is plan invocations minus one.
    """
    if not logs:
        raise EmptyLog("no ticks logged")
    p = np.array([log.state.p for log in logs])
    v = np.array([log.state.v for log in logs])
    pad = np.array([log.pad for log in logs])
    t = np.array([log.t for log in logs])
    distance = float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))
    speeds = np.linalg.norm(v, axis=1)
    flight_time = float(t[-1] - t[0])
    pad_distance = float(np.sum(np.linalg.norm(np.diff(pad, axis=0), axis=1)))
    target_speed = pad_distance / flight_time if flight_time > 0 else 0.0
    plans = [log.plan_ms for log in logs if log.plan_ms is not None]
    last = logs[-1]
    landed = str(getattr(last.phase, "value", last.phase)) == "LANDED"
    offset = float(math.hypot(*(p[-1, :2] - pad[-1, :2])))
    descent = float(-v[-1, 2])
    return SummaryMetrics(
        flight_distance_m=distance,
        target_speed_kmh=target_speed * KMH,
        uav_max_speed_kmh=float(speeds.max()) * KMH,
        uav_avg_speed_kmh=float(speeds.mean()) * KMH,
        mean_planning_time_ms=float(np.mean(plans)) if plans else 0.0,
        replanning_count=max(len(plans) - 1, 0),
        flight_time_s=flight_time,
        landed=landed,
        landing_success=bool(landed and offset <= touchdown_tolerance and descent <= max_touchdown_speed),
        final_offset_m=offset,
        touchdown_speed_mps=descent,
        obstacle_density=float(obstacle_density),
    )

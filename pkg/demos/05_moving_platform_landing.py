"""
Landing on a moving ground vehicle
==================================

Run the ``sim`` preset end to end, print the flight summary and write the
three output files to ``out/sim``.
"""

import json

from quadland.mission import valid_sequence
from quadland.sim import emit_outputs, load_preset, run_scenario

cfg = load_preset("sim")
metrics, logs = run_scenario(cfg)
print(json.dumps(metrics.to_dict(), indent=2))

phases = []
for log in logs:
    if not phases or phases[-1] != log.phase:
        phases.append(log.phase)
print("phases:", " > ".join(p.value for p in phases), "valid:", valid_sequence(phases))

paths = emit_outputs(metrics, logs, "out/sim")
print("wrote", *paths.values())

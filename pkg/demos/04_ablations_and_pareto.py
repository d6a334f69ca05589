"""
Ablations and the merged Pareto set
===================================

Run the full scheme next to its two ablations on the same seeds, then merge
the near-Pareto candidates of several runs and interpolate a boundary surface.
"""

from pathlib import Path

import numpy as np

from sagin_slicing import cli, orchestrator as orch
from sagin_slicing.analysis import InsufficientPointsError, boundary_surface
from sagin_slicing.config import ScenarioConfig

out = Path("demo_output")
runs = []
for seed in range(3):
    config = ScenarioConfig(K=(9, 9, 9), E=2, T=100, seed=seed)
    rows = {}
    for name, flags in (("full", {}), ("single", {"dual": False}),
                        ("fixed vUAV", {"fixed_uav": True})):
        art = orch.run_training(config, **flags)
        rows[name] = art.time_averaged()
        if name == "full":
            runs.append(cli.save_run(out / f"seed{seed}", "train", art))
    print(f"seed {seed}")
    for name, (tp, d, s) in rows.items():
        print(f"  {name:10s} {tp / 1e6:7.1f} Mbps  {d * 1e3:7.2f} ms  SINR {s:9.3g}")

front = cli.merge_fronts(runs)
print(f"{len(front)} non-dominated candidates across {len(runs)} runs")
try:
    gx, gy, gz = boundary_surface(front[:, :3], resolution=20)
    print("surface cells inside the hull:", int(np.isfinite(gz).sum()))
except InsufficientPointsError as exc:
    print("surface skipped:", exc)

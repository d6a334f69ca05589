"""
A short training run
====================

Train the central and distributed agents for a few hundred steps, compare
the first and last fifth of the run and write the reward curves as SVG.
"""

from pathlib import Path

import numpy as np

from sagin_slicing import cli, orchestrator as orch
from sagin_slicing.config import ScenarioConfig

config = ScenarioConfig(K=(9, 9, 9), E=3, T=200, seed=0)
art = orch.run_training(config)

q = len(art.metrics) // 5
common = art.normalizer.normalize(art.metrics[:, 2:5])
common[:, 1] = 1 - common[:, 1]
print("mean reward, first fifth:", common[:q].mean(axis=0).round(3))
print("mean reward, last fifth: ", common[-q:].mean(axis=0).round(3))
tp, delay, sinr = art.time_averaged()
print(f"time-averaged: {tp / 1e6:.1f} Mbps, {delay * 1e3:.2f} ms, SINR {sinr:.3g}")
print("conflicting users per step:", art.column("repairs").mean().round(2))
print("final vUAV positions:\n", art.uav_trace[-1].round(1))

out = Path("demo_output")
cli.save_run(out / "train", "train", art)
curves = {f"reward{i + 1}": cli.moving_average(common[:, i], 50) for i in range(3)}
(out / "rewards.svg").write_text(cli.svg_lines(curves, "rewards on one common scale"))
print("artifacts in", out.resolve())

"""Command-line front door: train, baseline, ablate, pareto, export.

Every run directory holds ``metrics.csv``, ``pareto.csv``, ``uav_trace.csv``,
``checkpoints/`` and ``manifest.json``. Set ``SAGIN_OUT_DIR`` to change the default output
directory when ``--out`` is not given.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import orchestrator
from .analysis import (OBJECTIVE_HEADER, InsufficientPointsError, boundary_surface,
                       nondominated_mask, write_points_csv, write_surface_csv)
from .config import ConfigError, ScenarioConfig, format_config, load_config

log = logging.getLogger("sagin_slicing")

OUT_ENV = "SAGIN_OUT_DIR"
METRICS_SCHEMA_VERSION = "1"
PARETO_EXTRA = ("reward1", "reward2", "reward3", "episode", "t")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- artifacts

def content_hash(subcommand: str, config: ScenarioConfig, extra: dict | None = None) -> str:
    h = hashlib.sha256()
    h.update(subcommand.encode())
    h.update(format_config(config).encode())
    h.update(json.dumps(extra or {}, sort_keys=True).encode())
    return h.hexdigest()


def write_metrics_csv(path: Path, metrics: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(orchestrator.METRIC_COLUMNS)
        for row in metrics:
            w.writerow([int(row[0]), int(row[1]), *(repr(float(v)) for v in row[2:9]),
                        int(row[9])])


def read_metrics_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != orchestrator.METRIC_COLUMNS:
        raise ValueError(f"{path}: unexpected metrics header")
    return np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(rows[0]))


def write_pareto_csv(path: Path, candidates) -> None:
    rows = [(*c.objectives, *c.rewards, c.episode, c.t) for c in candidates]
    write_points_csv(path, rows, extra_header=PARETO_EXTRA)


def read_pareto_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0][:3]) != OBJECTIVE_HEADER:
        raise ValueError(f"{path}: unexpected pareto header")
    return np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(rows[0]))


def write_uav_trace_csv(path: Path, trace: np.ndarray) -> None:
    """One row per step: ``step, x_1, y_1, ..., x_V, y_V``."""
    V = trace.shape[1] if trace.ndim == 3 else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", *(f"{a}{v + 1}" for v in range(V) for a in ("x", "y"))])
        for i, row in enumerate(trace):
            w.writerow([i, *(repr(float(v)) for v in row.ravel())])


def save_run(out: Path, subcommand: str, art: orchestrator.TrainingArtifacts,
             extra: dict | None = None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out / "metrics.csv", art.metrics)
    write_pareto_csv(out / "pareto.csv", art.candidates)
    write_uav_trace_csv(out / "uav_trace.csv", art.uav_trace)
    ckpt = out / "checkpoints"
    for name, agent in art.agents.items():
        agent.save(ckpt / name)
    if art.normalizer is not None:
        (ckpt / "normalizer.json").write_text(json.dumps(art.normalizer.state_dict()))
    manifest = {
        "subcommand": subcommand,
        "kind": art.kind,
        "seeds": [art.config.seed],
        "out_dir": str(out),
        "config": format_config(art.config),
        "extra": extra or {},
        "metrics_schema": METRICS_SCHEMA_VERSION,
        "content_hash": content_hash(subcommand, art.config, extra),
        "files": ["metrics.csv", "pareto.csv", "uav_trace.csv", "checkpoints", "manifest.json"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return out


# ---------------------------------------------------------------- svg

def svg_lines(series: dict[str, np.ndarray], title: str, width: int = 640,
              height: int = 360) -> str:
    """Minimal line chart; every series is scaled to its own [0, 1] range."""
    colours = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    pad = 40
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="100%" height="100%" fill="white"/>',
             f'<text x="{pad}" y="20" font-size="14">{title}</text>',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}"'
             ' fill="none" stroke="#888"/>']
    for j, (name, y) in enumerate(series.items()):
        y = np.asarray(y, dtype=float)
        if len(y) == 0:
            continue
        lo, hi = np.nanmin(y), np.nanmax(y)
        ys = (y - lo) / (hi - lo) if hi > lo else np.full_like(y, 0.5)
        xs = np.linspace(0, 1, len(y)) if len(y) > 1 else np.zeros(1)
        pts = " ".join(f"{pad + x * (width - 2 * pad):.1f},{height - pad - v * (height - 2 * pad):.1f}"
                       for x, v in zip(xs, ys))
        c = colours[j % len(colours)]
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 150}" y="{pad + 16 * (j + 1)}" font-size="12"'
                     f' fill="{c}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def moving_average(x, window: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    window = max(1, min(window, len(x)))
    return np.convolve(x, np.ones(window) / window, mode="valid")


# ---------------------------------------------------------------- commands

def _config(args) -> ScenarioConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.episodes is not None:
        overrides["E"] = args.episodes
    if args.timesteps is not None:
        overrides["T"] = args.timesteps
    if args.config is None:
        return ScenarioConfig().replace(**overrides)
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    return load_config(path, **overrides)


def _out_dir(args, default: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, ".")) / default


def parse_weights(text: str) -> tuple[float, float, float]:
    try:
        w = tuple(float(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad weights {text!r}; expected a:b:c") from exc
    if len(w) != 3 or min(w) <= 0:
        raise UsageError(f"bad weights {text!r}; expected three positive numbers a:b:c")
    return w


def cmd_train(args) -> int:
    config = _config(args)
    out = _out_dir(args, f"run-seed{config.seed}")
    save_run(out, "train", orchestrator.run_training(config))
    print(out)
    return 0


def cmd_baseline(args) -> int:
    config = _config(args)
    if args.kind == "maddpg":
        if args.weights:
            raise UsageError("--weights only applies to the utility baseline")
        art = orchestrator.run_maddpg_baseline(config)
        extra = {"kind": "maddpg"}
    else:
        if not args.weights:
            raise UsageError("the utility baseline needs --weights a:b:c")
        w = parse_weights(args.weights)
        art = orchestrator.run_scalar_utility_baseline(config, w, raw_units=args.raw_units)
        extra = {"kind": "utility", "weights": list(w), "raw_units": args.raw_units}
    out = _out_dir(args, f"baseline-{args.kind}-seed{config.seed}")
    save_run(out, "baseline", art, extra)
    print(out)
    return 0


def cmd_ablate(args) -> int:
    config = _config(args)
    out = _out_dir(args, f"ablate-seed{config.seed}")
    runs = {"full": {}, "single_allocation": {"dual": False}, "fixed_uav": {"fixed_uav": True}}
    for name, flags in runs.items():
        save_run(out / name, "ablate", orchestrator.run_training(config, **flags),
                 {"variant": name})
    print(out)
    return 0


def merge_fronts(run_dirs) -> np.ndarray:
    """Union of the runs' candidate rows, deduplicated and re-filtered on the objectives."""
    rows = [read_pareto_csv(Path(d) / "pareto.csv") for d in dict.fromkeys(map(str, run_dirs))]
    rows = [r for r in rows if len(r)]
    if not rows:
        return np.zeros((0, len(OBJECTIVE_HEADER) + len(PARETO_EXTRA)))
    allrows = np.unique(np.vstack(rows), axis=0)
    return allrows[nondominated_mask(allrows[:, :3])]


def cmd_pareto(args) -> int:
    for d in args.run_dirs:
        if not (Path(d) / "pareto.csv").is_file():
            raise UsageError(f"no pareto.csv in {d}")
    front = merge_fronts(args.run_dirs)
    if len(front) == 0:
        print("error: merged Pareto set is empty", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(os.environ.get(OUT_ENV, ".")) / "pareto_merged.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_points_csv(out, [(*r[:6], int(r[6]), int(r[7])) for r in front],
                     extra_header=PARETO_EXTRA)
    try:
        gx, gy, gz = boundary_surface(front[:, :3])
        write_surface_csv(out.with_name(out.stem + "_surface.csv"), gx, gy, gz)
    except InsufficientPointsError as exc:
        log.warning("surface skipped: %s", exc)
    print(out)
    return 0


def cmd_export(args) -> int:
    run = Path(args.run_dirs[0])
    if not (run / "metrics.csv").is_file():
        raise UsageError(f"no metrics.csv in {run}")
    m = read_metrics_csv(run / "metrics.csv")
    out = Path(args.out) if args.out else run
    out.mkdir(parents=True, exist_ok=True)
    window = max(1, len(m) // 50)
    cols = orchestrator.METRIC_COLUMNS
    rewards = {c: moving_average(m[:, cols.index(c)], window)
               for c in ("reward1", "reward2", "reward3")}
    (out / "rewards.svg").write_text(svg_lines(rewards, "slice rewards (moving average)"))
    metrics = {c: moving_average(m[:, cols.index(c)], window)
               for c in ("r1sum_bps", "d2ave_s", "sinr3ave_linear")}
    (out / "metrics.svg").write_text(svg_lines(metrics, "slice metrics (each self-scaled)"))
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sagin-slicing",
                                description="Multi-objective RAN slicing with multi-agent DDPG.")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", help="key=value scenario file (defaults if omitted)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or .)")
        sp.add_argument("--episodes", type=int)
        sp.add_argument("--timesteps", type=int)

    sp = sub.add_parser("train", help="train the central and distributed agents")
    run_flags(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("baseline", help="train a benchmark scheme")
    sp.add_argument("kind", choices=("maddpg", "utility"))
    sp.add_argument("--weights", help="utility weights a:b:c, e.g. 1:1:4")
    sp.add_argument("--raw-units", action="store_true", help="utility over physical units")
    run_flags(sp)
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("ablate", help="full scheme, single allocation and fixed vUAVs")
    run_flags(sp)
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("pareto", help="merge run Pareto sets and interpolate a surface")
    sp.add_argument("run_dirs", nargs="+")
    sp.add_argument("--out", help="merged CSV path")
    sp.set_defaults(func=cmd_pareto)

    sp = sub.add_parser("export", help="write SVG plots from a run directory")
    sp.add_argument("run_dirs", nargs=1)
    sp.add_argument("--out", help="directory for the SVG files")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # one-line cause for every other failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

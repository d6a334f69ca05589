"""Pareto-set utilities, rank voting, complexity counting and report helpers.

All objectives are maximised; delay enters as ``beta - delay``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

OBJECTIVE_HEADER = ("throughput_bps", "delay_margin_s", "sinr_linear")


@dataclass(frozen=True)
class ObjectivePoint:
    values: tuple[float, ...]
    tag: str = ""

    def __post_init__(self):
        if not all(np.isfinite(self.values)):
            raise ValueError("objective values must be finite")


def _vals(p) -> np.ndarray:
    return np.asarray(p.values if isinstance(p, ObjectivePoint) else p, dtype=float)


def dominates(a, b) -> bool:
    """True when ``a >= b`` everywhere and ``a > b`` somewhere."""
    a, b = _vals(a), _vals(b)
    if a.shape != b.shape:
        raise ValueError("points differ in dimension")
    return bool(np.all(a >= b) and np.any(a > b))


def nondominated_mask(values) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row (duplicates all kept)."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        ge = np.all(x >= x[i], axis=1)
        gt = np.any(x > x[i], axis=1)
        if np.any(ge & gt):
            keep[i] = False
    return keep


def nondominated_filter(points: Sequence) -> list:
    """Points not dominated by any other point, in input order."""
    if len(points) == 0:
        return []
    mask = nondominated_mask([_vals(p) for p in points])
    return [p for p, k in zip(points, mask) if k]


def asc_rank(values: Sequence[float], index: int, ties: str = "first") -> int:
    """1-based ascending rank of ``values[index]``.

    ``ties="first"`` breaks ties by position (earlier entries rank lower);
    ``ties="min"`` gives equal values the same, lowest, rank.
    """
    x = np.asarray(values, dtype=float)
    if not 0 <= index < len(x):
        raise IndexError("index out of range")
    v = x[index]
    below = int(np.sum(x < v))
    if ties == "min":
        return below + 1
    if ties == "first":
        return below + int(np.sum(x[:index] == v)) + 1
    raise ValueError("ties must be 'first' or 'min'")


def rank_sums(window, queries) -> np.ndarray:
    """Sum over objectives of each query's ``ties="min"`` rank within ``window``.

    ``window`` is ``(n, m)``, ``queries`` ``(b, m)``; queries need not belong
    to the window. Equal values share a rank, which keeps the arg-max row
    non-dominated even when rewards tie.
    """
    w = np.asarray(window, dtype=float)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    total = np.zeros(len(q), dtype=int)
    for j in range(w.shape[1]):
        col = np.sort(w[:, j])
        total += np.searchsorted(col, q[:, j], side="left") + 1
    return total


def layer_products(dims: Sequence[int]) -> int:
    return int(sum(a * b for a, b in zip(dims[:-1], dims[1:])))


def complexity_estimate(layouts: Iterable[tuple[Sequence[int], Sequence[int]]],
                        E: int = 1, T: int = 1) -> int:
    """``E * T * sum over agents of (actor + critic) layer-width products``.

    ``layouts`` yields one ``(actor_dims, critic_dims)`` pair per agent.
    """
    per_step = sum(layer_products(a) + layer_products(c) for a, c in layouts)
    return E * T * per_step


def time_averaged_metrics(trace) -> tuple[float, float, float]:
    """Means of (throughput, delay, SINR) over a trace of per-TS rows."""
    x = np.asarray(trace, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("trace must be a nonempty (T, 3) array")
    m = x.mean(axis=0)
    return float(m[0]), float(m[1]), float(m[2])


class InsufficientPointsError(ValueError):
    pass


def boundary_surface(points, resolution: int = 50, grid=None):
    """Piecewise-linear surface of the third objective over the first two.

    Triangulates the ``(objective 1, objective 2)`` plane (Delaunay) and
    interpolates linearly inside each simplex. Returns ``(gx, gy, gz)`` with
    ``NaN`` outside the convex hull. ``grid`` may pass explicit ``(xs, ys)``.
    """
    from scipy.interpolate import LinearNDInterpolator
    from scipy.spatial import QhullError

    x = np.asarray([_vals(p) for p in points], dtype=float)
    if len(x) < 3 or x.shape[1] != 3:
        raise InsufficientPointsError("need at least 3 three-objective points")
    try:
        interp = LinearNDInterpolator(x[:, :2], x[:, 2])
    except QhullError as exc:
        raise InsufficientPointsError("points are collinear in the first two objectives") from exc
    if grid is None:
        xs = np.linspace(x[:, 0].min(), x[:, 0].max(), resolution)
        ys = np.linspace(x[:, 1].min(), x[:, 1].max(), resolution)
    else:
        xs, ys = (np.asarray(g, dtype=float) for g in grid)
    gx, gy = np.meshgrid(xs, ys)
    return gx, gy, interp(gx, gy)


def write_points_csv(path: str | Path, rows, header=OBJECTIVE_HEADER, extra_header=()) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*header, *extra_header])
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_surface_csv(path: str | Path, gx, gy, gz, header=OBJECTIVE_HEADER) -> None:
    rows = [(a, b, c) for a, b, c in zip(gx.ravel(), gy.ravel(), gz.ravel())
            if np.isfinite(c)]
    write_points_csv(path, rows, header)

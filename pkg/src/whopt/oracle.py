"""Brute-force reference minimizer.

Exhaustive feasible grid scan plus recursive grid zoom.  Slow on
purpose and independent of the solver: it shares no search code with
the truncation machinery, so the two can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS
from .errors import NoFeasiblePoint, OracleFailure
from .expr import Expr, eval_many
from .geometry import SetDescription, contains, contains_many


@dataclass(frozen=True)
class OracleResult:
    x: np.ndarray
    value: float
    spacing: float            # final grid spacing per axis (max over axes)
    points_scanned: int

    def to_dict(self) -> dict:
        return {
            "x": [float(c) for c in self.x],
            "value": float(self.value),
            "spacing": float(self.spacing),
            "points_scanned": int(self.points_scanned),
        }


def _objective_values(f: Expr, pts: np.ndarray, u) -> np.ndarray:
    vals = eval_many(f, pts)
    if u is not None:
        vals = vals - pts @ np.asarray(u, dtype=float)
    return np.where(np.isfinite(vals), vals, math.inf)


def _lexi_best(pts: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, float]:
    best = float(np.min(vals))
    ties = pts[vals <= best]
    order = np.lexsort(tuple(ties[:, i] for i in range(ties.shape[1] - 1, -1, -1)))
    return ties[order[0]], best


def grid_minimize(
    f: Expr,
    s: SetDescription,
    lows,
    highs,
    resolution,
    u=None,
    max_points: int = DEFAULTS.oracle_max_points,
) -> OracleResult:
    """Minimum of ``f - <u, x>`` over every feasible grid point of the box.

    ``resolution`` is points per axis (int or per-axis sequence).  Ties
    break toward the lexicographically smallest point.
    """
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    n = len(lows)
    if n > 3:
        raise OracleFailure(f"oracle scans need n <= 3, got {n}")
    res = np.full(n, resolution, dtype=int) if np.isscalar(resolution) \
        else np.asarray(resolution, dtype=int)
    total = int(np.prod(res.astype(np.int64)))
    if total > max_points:
        raise OracleFailure(f"grid of {total} points exceeds the {max_points} budget")
    axes = [np.linspace(lo, hi, k) for lo, hi, k in zip(lows, highs, res)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    mask = contains_many(s, pts)
    if not np.any(mask):
        raise NoFeasiblePoint("no feasible point on the oracle grid")
    feas = pts[mask]
    vals = _objective_values(f, feas, u)
    if not np.any(np.isfinite(vals)):
        raise NoFeasiblePoint("objective undefined at every feasible grid point")
    x, value = _lexi_best(feas, vals)
    spacing = float(np.max((highs - lows) / np.maximum(1, res - 1)))
    return OracleResult(x=x, value=value, spacing=spacing, points_scanned=total)


def refine(
    f: Expr,
    s: SetDescription,
    x0,
    spacing: float,
    u=None,
    rounds: int = DEFAULTS.refine_rounds,
    factor: float = DEFAULTS.refine_factor,
    resolution: int = DEFAULTS.refine_resolution,
) -> OracleResult:
    """Recursive grid zoom around ``x0``: each round scans a local grid
    of half-width ``spacing`` and shrinks by ``factor``."""
    x = np.asarray(x0, dtype=float)
    if not contains(s, x, DEFAULTS.membership_tol):
        raise NoFeasiblePoint("refinement start is infeasible")
    value = float(_objective_values(f, x[None, :], u)[0])
    scanned = 1
    width = float(spacing)
    for _ in range(rounds):
        axes = [np.linspace(c - width, c + width, resolution) for c in x]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        scanned += len(pts)
        mask = contains_many(s, pts)
        if np.any(mask):
            feas = pts[mask]
            vals = _objective_values(f, feas, u)
            if np.any(np.isfinite(vals)):
                cand_x, cand_v = _lexi_best(feas, vals)
                if (cand_v, tuple(cand_x)) < (value, tuple(x)):
                    x, value = cand_x, cand_v
        width /= factor
    return OracleResult(x=x, value=value, spacing=width, points_scanned=scanned)

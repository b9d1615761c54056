"""Derivative-free local search used by every module that hunts for
feasible points: Hooke-Jeeves pattern search with a feasibility filter.

Moves are axis steps; only feasible strictly improving trials are
accepted; the step halves when a sweep fails and the search stops once
the step drops below its floor.  Everything is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    evals: int


def pattern_search(
    objective: Callable[[np.ndarray], float],
    feasible: Callable[[np.ndarray], bool],
    start: np.ndarray,
    step: float,
    min_step: float,
    max_evals: int = 200_000,
) -> SearchResult:
    """Minimize ``objective`` over ``{x : feasible(x)}`` from a feasible start.

    ``objective`` may return inf/nan for points it dislikes; such trials
    are rejected.  Raises ValueError if the start itself is infeasible.
    """
    x = np.asarray(start, dtype=float).copy()
    if not feasible(x):
        raise ValueError("pattern search needs a feasible start")
    evals = 1
    fx = _safe(objective, x)
    n = x.size
    prev = x.copy()
    while step > min_step and evals < max_evals:
        base = x.copy()
        improved, x, fx, used = _explore(objective, feasible, x, fx, step)
        evals += used
        if improved:
            # pattern move: extrapolate along the accepted direction
            while evals < max_evals:
                trial = x + (x - prev)
                prev = x.copy()
                if not feasible(trial):
                    break
                ft = _safe(objective, trial)
                evals += 1
                if ft < fx:
                    ok, x2, f2, used = _explore(objective, feasible, trial, ft, step)
                    evals += used
                    x, fx = (x2, f2) if ok else (trial, ft)
                else:
                    break
            prev = base
        else:
            step *= 0.5
            prev = base
    return SearchResult(x=x, value=fx, evals=evals)


def _explore(objective, feasible, x, fx, step):
    evals = 0
    improved = False
    x = x.copy()
    for i in range(x.size):
        for sign in (1.0, -1.0):
            trial = x.copy()
            trial[i] += sign * step
            if not feasible(trial):
                continue
            ft = _safe(objective, trial)
            evals += 1
            if ft < fx:
                x, fx = trial, ft
                improved = True
                break
    return improved, x, fx, evals


def _safe(objective, x) -> float:
    v = objective(x)
    if v is None or v != v:
        return math.inf
    return float(v)


def best_of(results: Sequence[SearchResult]) -> SearchResult:
    """Lexicographic tie-break: best value, then smallest point."""
    return min(results, key=lambda r: (r.value, tuple(r.x)))


def grid_axes(lows: np.ndarray, highs: np.ndarray, resolution: int) -> list[np.ndarray]:
    return [np.linspace(lo, hi, resolution) for lo, hi in zip(lows, highs)]


def grid_points(lows, highs, resolution: int) -> np.ndarray:
    """Full cartesian grid, rows are points."""
    axes = grid_axes(np.asarray(lows, float), np.asarray(highs, float), resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)

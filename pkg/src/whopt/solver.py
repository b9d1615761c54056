"""Expanding-truncation solver.

Each truncation minimizes over the feasible set clipped to a ball; the
radius doubles until either the minimizer settles strictly inside the
ball with a stable value (Converged) or it rides the boundary along a
stable direction (Escaping, with the normalized escape direction
reported against the kernel).  The inner engine is multistart pattern
search seeded from a feasible grid scan; no derivatives are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .errors import DegreeTooSmall, DomainError, NoFeasibleSeed
from .expr import Expr, differentiable_at, eval_many, evaluate, gradient
from .geometry import SetDescription, ambient_box, contains, contains_many
from .kernel import KernelReport, NONTRIVIAL
from .search import SearchResult, best_of, grid_points, pattern_search
from .verdicts import ValidationVerdict, _round_rec

CONVERGED = "Converged"
ESCAPING = "Escaping"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class TruncationRecord:
    radius: float
    feasible: bool
    x: np.ndarray | None
    value: float
    norm: float
    evals: int

    def to_dict(self) -> dict:
        return _round_rec({
            "radius": self.radius,
            "feasible": self.feasible,
            "x": None if self.x is None else [float(c) for c in self.x],
            "value": None if not self.feasible else self.value,
            "norm": None if not self.feasible else self.norm,
            "evals": self.evals,
        })


@dataclass
class SolveOutcome:
    status: str
    x: np.ndarray | None
    value: float
    norm: float
    radius: float
    trace: tuple[TruncationRecord, ...]
    direction: np.ndarray | None = None      # escape direction
    kernel_distance: float | None = None     # chord distance to kernel rays
    asymptotic_value: float | None = None    # h(direction) when h is known
    evals: int = 0

    def to_dict(self) -> dict:
        return _round_rec({
            "status": self.status,
            "x": None if self.x is None else [float(c) for c in self.x],
            "value": self.value if self.x is not None else None,
            "norm": self.norm if self.x is not None else None,
            "radius": self.radius,
            "direction": None if self.direction is None
            else [float(c) for c in self.direction],
            "kernel_distance": self.kernel_distance,
            "asymptotic_value": self.asymptotic_value,
            "evals": self.evals,
            "trace": [r.to_dict() for r in self.trace],
        })


def _shifted(f: Expr, u):
    u_vec = None if u is None else np.asarray(u, dtype=float)

    def objective(x):
        try:
            v = evaluate(f, x)
        except DomainError:
            return math.inf
        if u_vec is not None:
            v -= float(np.dot(u_vec, x))
        return v

    def objective_many(pts):
        vals = eval_many(f, pts)
        if u_vec is not None:
            vals = vals - pts @ u_vec
        return np.where(np.isfinite(vals), vals, math.inf)

    return objective, objective_many


def solve_truncated(
    problem,
    radius: float,
    u=None,
    restarts: int = DEFAULTS.restarts,
    warm=None,
    grid_resolution: int = DEFAULTS.grid_resolution,
) -> SearchResult:
    """Best point of ``K ∩ B(0, radius)`` found by multistart pattern
    search.  Raises NoFeasibleSeed when the truncation looks empty."""
    s: SetDescription = problem.feasible_set
    tol = DEFAULTS.membership_tol
    objective, objective_many = _shifted(problem.objective, u)

    def feasible(x):
        return float(np.linalg.norm(x)) <= radius * (1 + 1e-12) + tol \
            and contains(s, x, tol)

    seeds: list[np.ndarray] = []
    for cand in ([warm] if warm is not None else []):
        if feasible(np.asarray(cand, dtype=float)):
            seeds.append(np.asarray(cand, dtype=float))
    start = problem.feasible_start
    if start.size and feasible(start):
        seeds.append(start.astype(float))
    lows, highs = ambient_box(s, radius)
    pts = grid_points(lows, highs, grid_resolution)
    pts = pts[np.linalg.norm(pts, axis=1) <= radius * (1 + 1e-12)]
    mask = contains_many(s, pts, tol)
    if np.any(mask):
        feas = pts[mask]
        vals = objective_many(feas)
        order = np.argsort(vals, kind="stable")
        for idx in order[: max(1, restarts)]:
            if math.isfinite(vals[idx]):
                seeds.append(feas[idx])
    if not seeds:
        raise NoFeasibleSeed(f"no feasible point inside radius {radius}")
    uniq: list[np.ndarray] = []
    for sd in seeds:
        if all(np.linalg.norm(sd - q) > 1e-3 * radius for q in uniq):
            uniq.append(sd)
    results = []
    for sd in uniq[: max(1, restarts)]:
        results.append(pattern_search(
            objective, feasible, sd,
            step=radius / 8,
            min_step=DEFAULTS.step_floor_rel * radius,
        ))
    return best_of(results)


def solve_expanding(
    problem,
    u=None,
    k0: float = DEFAULTS.k0,
    growth: float = DEFAULTS.growth,
    max_doublings: int = DEFAULTS.max_doublings,
    restarts: int = DEFAULTS.restarts,
    kernel_report: KernelReport | None = None,
) -> SolveOutcome:
    """Solve by expanding truncations until convergence or escape."""
    # a nonzero shift turns this into the parametric problem, degree > 1
    if u is not None and np.any(np.asarray(u, dtype=float) != 0.0):
        alpha = getattr(problem, "alpha", None)
        if alpha is not None and alpha <= 1:
            raise DegreeTooSmall(
                f"shifted solve requires homogeneity degree > 1, got {alpha}")
    trace: list[TruncationRecord] = []
    warm = None
    best: SearchResult | None = None
    prev_value: float | None = None
    stable = 0
    boundary_run: list[np.ndarray] = []
    total_evals = 0
    radius = float(k0)
    status = INDETERMINATE
    final_radius = radius
    for level in range(max_doublings + 1):
        final_radius = radius
        try:
            res = solve_truncated(problem, radius, u=u,
                                  restarts=restarts, warm=warm)
        except NoFeasibleSeed:
            trace.append(TruncationRecord(radius, False, None, math.inf, math.inf, 0))
            radius *= growth
            continue
        total_evals += res.evals
        norm = float(np.linalg.norm(res.x))
        trace.append(TruncationRecord(radius, True, res.x.copy(),
                                      res.value, norm, res.evals))
        warm = res.x
        if best is None or (res.value, tuple(res.x)) < (best.value, tuple(best.x)):
            best = res
        if prev_value is not None and \
                abs(res.value - prev_value) <= DEFAULTS.value_rtol * (1 + abs(res.value)):
            stable += 1
        elif prev_value is not None:
            stable = 0
        prev_value = res.value
        on_boundary = norm >= DEFAULTS.interior_fraction * radius
        if on_boundary and norm > 0:
            boundary_run.append(res.x / norm)
        else:
            boundary_run.clear()
        if not on_boundary and stable >= DEFAULTS.stable_levels:
            status = CONVERGED
            break
        if len(boundary_run) >= DEFAULTS.escape_levels:
            run = boundary_run[-DEFAULTS.escape_levels:]
            drift = max(
                float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))
                for a in run for b in run
            )
            if drift <= DEFAULTS.drift_angle:
                status = ESCAPING
                break
        radius *= growth
    if best is None:
        raise NoFeasibleSeed("every truncation level was infeasible")
    outcome = SolveOutcome(
        status=status,
        x=best.x,
        value=best.value,
        norm=float(np.linalg.norm(best.x)),
        radius=final_radius,
        trace=tuple(trace),
        evals=total_evals,
    )
    if status == ESCAPING:
        direction = boundary_run[-1]
        outcome.direction = direction
        if problem.asymptotic is not None:
            try:
                outcome.asymptotic_value = float(evaluate(problem.asymptotic, direction))
            except DomainError:
                outcome.asymptotic_value = None
        if kernel_report is not None and kernel_report.classification == NONTRIVIAL:
            outcome.kernel_distance = kernel_ray_distance(kernel_report, direction)
    return outcome


def kernel_ray_distance(report: KernelReport, direction) -> float:
    """Chord distance from a unit direction to the closest kernel ray."""
    direction = np.asarray(direction, dtype=float)
    rays = list(report.rays)
    if report.cone is not None:
        rays.extend(report.cone.require_generators())
    if not rays:
        return math.inf
    return float(min(np.linalg.norm(direction - np.asarray(r)) for r in rays))


def minty_check(
    problem,
    x,
    u=None,
    probes: int = DEFAULTS.minty_probes,
    seed: int = 0,
    tol: float = DEFAULTS.minty_tol,
) -> ValidationVerdict:
    """Variational-inequality check at a candidate solution of a convex
    pseudoconvex problem: ``<grad f(x) - u, y - x> >= 0`` over feasible
    probes ``y``.  Skipped (and marked so) when the gradient is not
    defined at ``x``."""
    s: SetDescription = problem.feasible_set
    x = np.asarray(x, dtype=float)
    if not differentiable_at(problem.objective, x):
        return ValidationVerdict(
            check="minty",
            passed=True,
            statistic=0.0,
            threshold=tol,
            params={"skipped": True,
                    "reason": "objective not differentiable at the candidate"},
        )
    g = gradient(problem.objective, x)
    if u is not None:
        g = g - np.asarray(u, dtype=float)
    radius = max(20.0, 4 * float(np.linalg.norm(x)),
                 4 * float(np.linalg.norm(problem.feasible_start) or 0.0))
    lows, highs = ambient_box(s, radius)
    pts = grid_points(lows, highs, 23)
    pts = pts[contains_many(s, pts)]
    rng = np.random.default_rng(seed)
    extra = rng.uniform(lows, highs, size=(4 * probes, s.dim))
    extra = extra[contains_many(s, extra)]
    pool = np.vstack([pts, extra]) if len(extra) else pts
    if len(pool) > probes:
        idx = np.linspace(0, len(pool) - 1, probes).astype(int)
        pool = pool[idx]
    worst = -math.inf
    offender = None
    for y in pool:
        gap = float(g @ (y - x))
        slack = tol * (1.0 + float(np.linalg.norm(y - x)))
        violation = -(gap + slack)
        normalized = -gap / (1.0 + float(np.linalg.norm(y - x)))
        if violation > 0 and normalized > worst:
            worst = normalized
            offender = y
        elif offender is None:
            worst = max(worst, normalized)
    passed = offender is None
    return ValidationVerdict(
        check="minty",
        passed=passed,
        statistic=float(worst if worst != -math.inf else 0.0),
        threshold=tol,
        offenders=() if offender is None else (
            {"y": [float(c) for c in offender]},),
        params={"probes": int(len(pool)), "seed": seed, "skipped": False},
    )

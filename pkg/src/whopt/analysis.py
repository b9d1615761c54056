"""Numeric validation of problem structure.

Checks here are sampled evidence, not proofs: positive homogeneity of
the declared asymptotic part, the little-o remainder decay along
feasible directions, agreement of alternate asymptotic parts on the
asymptotic cone, curvature spot checks, and a boundedness-below probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .config import DEFAULTS
from .errors import DomainError, OracleFailure
from .expr import (
    Expr,
    arity,
    domain_margin,
    eval_many,
    evaluate,
    gradient,
)
from .geometry import (
    PolyhedralCone,
    SetDescription,
    ambient_box,
    contains,
    contains_many,
    feasible_grid,
    realize_direction,
    sphere_rays,
)
from .search import grid_points, pattern_search
from .verdicts import ValidationVerdict


@dataclass
class ProblemSpec:
    """A weakly homogeneous problem instance: minimize f over K."""

    n: int
    alpha: Fraction
    objective: Expr
    feasible_set: SetDescription
    asymptotic: Expr | None = None
    alternates: tuple[Expr, ...] = ()
    feasible_start: np.ndarray = field(default_factory=lambda: np.zeros(0))
    seed: int = 0
    label: str = "problem"

    def __post_init__(self):
        self.alpha = Fraction(self.alpha)
        if self.alpha <= 0:
            raise ValueError("homogeneity degree must be positive")
        self.alternates = tuple(self.alternates)
        self.feasible_start = np.asarray(self.feasible_start, dtype=float)
        for name, e in self.exprs():
            if arity(e) > self.n:
                raise ValueError(f"{name} uses more than {self.n} variables")

    def exprs(self):
        out = [("objective", self.objective)]
        if self.asymptotic is not None:
            out.append(("asymptotic", self.asymptotic))
        out.extend((f"alternate_{i}", e) for i, e in enumerate(self.alternates))
        return out

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)


@dataclass
class SampleRegion:
    """Axis box, optionally intersected with a feasible set, with a
    safety margin keeping samples inside fractional-power domains."""

    lows: np.ndarray
    highs: np.ndarray
    member_of: SetDescription | None = None
    domain_margin: float = DEFAULTS.domain_margin

    def __post_init__(self):
        self.lows = np.asarray(self.lows, dtype=float)
        self.highs = np.asarray(self.highs, dtype=float)

    @classmethod
    def box(cls, lo: float, hi: float, dim: int,
            member_of: SetDescription | None = None) -> "SampleRegion":
        return cls(np.full(dim, lo), np.full(dim, hi), member_of)


def sample_region(region: SampleRegion, count: int, seed: int,
                  smooth_exprs: Sequence[Expr] = ()) -> np.ndarray:
    """Uniform rejection samples from the region.  Points where any of
    ``smooth_exprs`` is non-differentiable are rejected too."""
    rng = np.random.default_rng(seed)
    dim = len(region.lows)
    out: list[np.ndarray] = []
    attempts = 0
    while len(out) < count and attempts < 400 * count + 1000:
        batch = rng.uniform(region.lows, region.highs, size=(max(count, 64), dim))
        attempts += len(batch)
        if region.member_of is not None:
            batch = batch[contains_many(region.member_of, batch)]
        for x in batch:
            if all(domain_margin(e, x) >= region.domain_margin for e in smooth_exprs):
                out.append(x)
            if len(out) >= count:
                break
    if len(out) < count:
        raise OracleFailure(
            f"could not draw {count} samples from the region (got {len(out)})"
        )
    return np.array(out[:count])


# ---------------------------------------------------------------------------
# weak homogeneity checks


def check_positive_homogeneity(
    h: Expr,
    alpha: Fraction,
    ambient: PolyhedralCone,
    samples: int = DEFAULTS.homogeneity_samples,
    scales: Sequence[float] = DEFAULTS.homogeneity_scales,
    seed: int = 0,
    rtol: float = DEFAULTS.homogeneity_rtol,
) -> ValidationVerdict:
    """Check ``h(t x) = t^alpha h(x)`` on random ambient points."""
    rng = np.random.default_rng(seed)
    gens = ambient.require_generators()
    if len(gens) == 0:
        gens = np.eye(ambient.dim)
    a = float(alpha)
    worst = 0.0
    offenders = []
    for _ in range(samples):
        w = rng.uniform(0.1, 1.0, size=len(gens))
        x = w @ gens
        try:
            hx = evaluate(h, x)
        except DomainError:
            continue
        for t in scales:
            expected = (t ** a) * hx
            try:
                actual = evaluate(h, t * x)
            except DomainError:
                actual = math.nan
            drift = abs(actual - expected) / (1.0 + abs(expected))
            if not math.isfinite(drift):
                drift = math.inf
            if drift > worst:
                worst = drift
                if drift > rtol:
                    offenders.append({
                        "point": [float(c) for c in x],
                        "scale": float(t),
                        "drift": drift,
                    })
    return ValidationVerdict(
        check="positive_homogeneity",
        passed=worst <= rtol,
        statistic=worst,
        threshold=rtol,
        offenders=tuple(offenders[-3:]),
        params={"alpha": str(alpha), "samples": samples,
                "scales": [float(t) for t in scales], "seed": seed},
    )


def realization_points(
    s: SetDescription,
    cones,
    scales: Sequence[float] = DEFAULTS.littleo_scales,
    resolution: int = DEFAULTS.littleo_resolution,
) -> dict:
    """Feasible points tracking each realizable direction of the
    asymptotic cone at each scale.  Keyed by (direction tuple, scale)."""
    rays = sphere_rays(cones, resolution).rays
    points: dict = {}
    for v in rays:
        for t in scales:
            hit = realize_direction(s, v, t)
            if hit is None:
                continue
            x, dist = hit
            if dist <= 0.5:  # direction genuinely tracked
                points[(tuple(float(c) for c in v), float(t))] = x
    return points


def check_little_o(
    f: Expr,
    h: Expr,
    alpha: Fraction,
    s: SetDescription,
    cones,
    scales: Sequence[float] = DEFAULTS.littleo_scales,
    points: dict | None = None,
    target: float = DEFAULTS.littleo_target,
) -> ValidationVerdict:
    """Check ``|f - h| / |x|^alpha -> 0`` along feasible points tracking
    each realizable asymptotic direction."""
    if points is None:
        points = realization_points(s, cones, scales)
    if not points:
        raise OracleFailure("no realizable directions to probe the remainder on")
    a = float(alpha)
    by_dir: dict = {}
    for (v, t), x in points.items():
        nx = float(np.linalg.norm(x))
        if nx <= 0:
            continue
        try:
            r = abs(evaluate(f, x) - evaluate(h, x)) / nx ** a
        except DomainError:
            r = math.inf
        by_dir.setdefault(v, []).append((t, r, x))
    worst_final = 0.0
    trend_bad = 0.0
    offenders = []
    for v, rows in by_dir.items():
        rows.sort()
        r_first = rows[0][1]
        r_last = rows[-1][1]
        if r_last > worst_final:
            worst_final = r_last
        shrink = r_last - max(0.9 * r_first, 1e-9)
        if shrink > trend_bad:
            trend_bad = shrink
        if r_last > target or shrink > 0:
            offenders.append({
                "direction": list(v),
                "ratio_first": r_first,
                "ratio_final": r_last,
                "scale_final": rows[-1][0],
            })
    passed = worst_final <= target and trend_bad <= 0
    return ValidationVerdict(
        check="little_o_remainder",
        passed=passed,
        statistic=worst_final,
        threshold=target,
        offenders=tuple(offenders[:3]),
        params={"alpha": str(alpha), "scales": [float(t) for t in scales],
                "directions": len(by_dir)},
    )


def asymptotic_agreement(
    h: Expr,
    h_alt: Expr,
    cones,
    resolution: int = DEFAULTS.ray_resolution,
    tol: float = DEFAULTS.agreement_tol,
) -> ValidationVerdict:
    """Alternate asymptotic parts must agree on the asymptotic cone."""
    rays = sphere_rays(cones, resolution).rays
    worst = 0.0
    offenders = []
    for v in rays:
        try:
            gap = abs(evaluate(h, v) - evaluate(h_alt, v))
        except DomainError:
            gap = math.inf
        if gap > worst:
            worst = gap
            if gap > tol:
                offenders.append({"ray": [float(c) for c in v], "gap": gap})
    return ValidationVerdict(
        check="asymptotic_agreement",
        passed=worst <= tol,
        statistic=worst,
        threshold=tol,
        offenders=tuple(offenders[-3:]),
        params={"rays": len(rays), "resolution": resolution},
    )


# ---------------------------------------------------------------------------
# curvature spot checks


def check_pseudoconvexity(
    f: Expr,
    region: SampleRegion,
    pairs: int = DEFAULTS.pseudoconvex_pairs,
    seed: int = 0,
    slack: float = DEFAULTS.pseudoconvex_slack,
) -> ValidationVerdict:
    """Sampled pseudoconvexity: whenever ``<grad f(x), y-x> >= 0`` the
    value may not strictly decrease toward y, i.e. ``<grad f(y), y-x>``
    must stay above ``-slack``."""
    pts = sample_region(region, 2 * pairs, seed, smooth_exprs=(f,))
    xs, ys = pts[:pairs], pts[pairs:]
    worst = 0.0
    tested = 0
    offenders = []
    for x, y in zip(xs, ys):
        d = y - x
        gx = gradient(f, x)
        if float(gx @ d) < 0.0:
            continue
        tested += 1
        gy = gradient(f, y)
        violation = -float(gy @ d)
        if violation > worst:
            worst = violation
            if violation > slack:
                offenders.append({
                    "x": [float(c) for c in x],
                    "y": [float(c) for c in y],
                    "violation": violation,
                })
    return ValidationVerdict(
        check="pseudoconvexity",
        passed=worst <= slack,
        statistic=worst,
        threshold=slack,
        offenders=tuple(offenders[-3:]),
        params={"pairs": pairs, "tested": tested, "seed": seed},
    )


def check_convexity_hessian(
    f: Expr,
    region: SampleRegion,
    samples: int = DEFAULTS.hessian_samples,
    seed: int = 0,
    tol: float = DEFAULTS.hessian_psd_tol,
) -> ValidationVerdict:
    """Smallest Hessian eigenvalue over region samples must exceed -tol."""
    from .expr import hessian

    pts = sample_region(region, samples, seed, smooth_exprs=(f,))
    worst = math.inf
    offenders = []
    for x in pts:
        try:
            eigs = np.linalg.eigvalsh(hessian(f, x))
        except DomainError:
            continue
        lo = float(eigs[0])
        if lo < worst:
            worst = lo
            if lo < -tol:
                offenders.append({"point": [float(c) for c in x], "eigenvalue": lo})
    return ValidationVerdict(
        check="convexity_hessian",
        passed=worst >= -tol,
        statistic=worst,
        threshold=-tol,
        offenders=tuple(offenders[-3:]),
        params={"samples": samples, "seed": seed},
    )


def check_set_convexity(
    s: SetDescription,
    midpoints: int = DEFAULTS.convexity_midpoints,
    seed: int = 0,
    radius: float = DEFAULTS.region_hi,
) -> ValidationVerdict:
    """Midpoints of feasible pairs must stay feasible (sampled)."""
    pts = feasible_grid(s, radius)
    if len(pts) < 2:
        raise OracleFailure("not enough feasible samples for the midpoint check")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(pts), size=(midpoints, 2))
    bad = 0
    offenders = []
    for i, j in idx:
        mid = 0.5 * (pts[i] + pts[j])
        if not contains(s, mid, 1e-7):
            bad += 1
            if len(offenders) < 3:
                offenders.append({"midpoint": [float(c) for c in mid]})
    return ValidationVerdict(
        check="set_convexity",
        passed=bad == 0,
        statistic=float(bad),
        threshold=0.0,
        offenders=tuple(offenders),
        params={"midpoints": midpoints, "seed": seed, "radius": radius},
    )


# ---------------------------------------------------------------------------
# boundedness probe and derivatives


def lower_bound_probe(
    f: Expr,
    s: SetDescription,
    u: np.ndarray | None = None,
    scales: Sequence[float] = DEFAULTS.lower_bound_scales,
    resolution: int = DEFAULTS.grid_resolution,
) -> ValidationVerdict:
    """Running feasible minimum over expanding boxes.  Flags Unbounded
    when the minimum keeps falling (drop beyond the configured budget);
    otherwise reports the best sampled value as evidence of a floor."""
    u_vec = None if u is None else np.asarray(u, dtype=float)
    per_scale = []
    best = math.inf
    best_x = None
    for t in scales:
        lows, highs = ambient_box(s, t)
        pts = grid_points(lows, highs, resolution)
        mask = contains_many(s, pts)
        if np.any(mask):
            feas = pts[mask]
            vals = eval_many(f, feas)
            if u_vec is not None:
                vals = vals - feas @ u_vec
            vals = np.where(np.isfinite(vals), vals, math.inf)
            k = int(np.argmin(vals))
            if vals[k] < best:
                best, best_x = float(vals[k]), feas[k]
        per_scale.append(best if best != math.inf else None)
    if best_x is not None:
        # polish inside the largest box so the floor estimate is tight
        lows, highs = ambient_box(s, max(scales))
        tol = DEFAULTS.membership_tol

        def objective(x):
            try:
                v = evaluate(f, x)
            except DomainError:
                return math.inf
            return v - float(x @ u_vec) if u_vec is not None else v

        def feasible(x):
            return bool(np.all(x >= lows - tol) and np.all(x <= highs + tol)
                        and contains(s, x, tol))

        res = pattern_search(objective, feasible, best_x,
                             step=max(1.0, float(np.linalg.norm(best_x)) / 8),
                             min_step=1e-9)
        if res.value < best:
            best, best_x = res.value, res.x
    finite_vals = [v for v in per_scale if v is not None]
    drop = (finite_vals[0] - finite_vals[-1]) if len(finite_vals) >= 2 else 0.0
    unbounded = drop > DEFAULTS.unbounded_drop
    return ValidationVerdict(
        check="lower_bound_probe",
        passed=not unbounded,
        statistic=float(best) if best != math.inf else math.inf,
        threshold=-math.inf,
        offenders=(),
        params={
            "scales": [float(t) for t in scales],
            "running_min": [None if v is None else float(v) for v in per_scale],
            "drop": float(drop),
            "unbounded": bool(unbounded),
            "argmin": None if best_x is None else [float(c) for c in best_x],
        },
    )


def fd_gradient(f: Expr, x, rel_step: float = DEFAULTS.fd_rel_step) -> np.ndarray:
    """Central finite differences, step scaled by 1 + |x|."""
    x = np.asarray(x, dtype=float)
    h = rel_step * (1.0 + float(np.linalg.norm(x)))
    out = np.zeros(len(x))
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (evaluate(f, xp) - evaluate(f, xm)) / (2 * h)
    return out

"""Cones, piecewise feasible sets, and asymptotic-cone machinery.

Feasible sets are finite unions of pieces; each piece combines linear
rows ``A x <= b`` with smooth constraints ``g(x) <= 0``.  Asymptotic
cones are represented as unions of polyhedral cones carrying a
generator view and, when available, a half-space view.  Generator
reconstruction from half-spaces is exact for dimension <= 3.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .config import DEFAULTS, realization_eta
from .errors import (
    DimensionTooLarge,
    DomainError,
    OracleFailure,
    Undeclared,
)
from .expr import Expr, eval_many, evaluate
from .search import grid_points, pattern_search
from .verdicts import ValidationVerdict

_FILTER_TOL = 1e-10


def _unit_rows(vectors) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(vectors, dtype=float))
    if arr.size == 0:
        return arr.reshape(0, arr.shape[1] if arr.ndim == 2 else 0)
    norms = np.linalg.norm(arr, axis=1)
    keep = norms > 1e-14
    arr = arr[keep] / norms[keep, None]
    return arr


def _dedup_rows(rows: np.ndarray, decimals: int = 10) -> np.ndarray:
    seen = {}
    for row in rows:
        seen.setdefault(tuple(np.round(row, decimals)), row)
    if not seen:
        return rows.reshape(0, rows.shape[1] if rows.ndim == 2 else 0)
    return np.array(sorted(seen.values(), key=tuple))


class PolyhedralCone:
    """Finitely generated convex cone with generator and half-space views.

    ``generators`` are unit rows; an empty generator list means the
    origin cone.  When both views exist they describe the same cone.
    """

    def __init__(self, dim: int, generators=None, halfspace=None):
        if generators is None and halfspace is None:
            raise ValueError("a cone needs at least one view")
        self.dim = int(dim)
        self.generators = None if generators is None else _unit_rows(
            np.asarray(generators, dtype=float).reshape(-1, dim)
        )
        self.halfspace = None if halfspace is None else np.atleast_2d(
            np.asarray(halfspace, dtype=float)
        ).reshape(-1, dim)

    @classmethod
    def from_generators(cls, generators, dim: int | None = None) -> "PolyhedralCone":
        arr = np.atleast_2d(np.asarray(generators, dtype=float))
        if dim is None:
            dim = arr.shape[1]
        return cls(dim, generators=arr.reshape(-1, dim))

    @classmethod
    def from_halfspace(cls, rows, dim: int | None = None) -> "PolyhedralCone":
        arr = np.atleast_2d(np.asarray(rows, dtype=float))
        if dim is None:
            dim = arr.shape[1]
        cone = cls(dim, halfspace=arr.reshape(-1, dim))
        if dim <= 3:
            cone.generators = _generators_of_halfspace(cone.halfspace, dim)
        return cone

    @classmethod
    def full_space(cls, dim: int) -> "PolyhedralCone":
        eye = np.eye(dim)
        return cls(dim, generators=np.vstack([eye, -eye]),
                   halfspace=np.zeros((0, dim)))

    @classmethod
    def origin(cls, dim: int) -> "PolyhedralCone":
        return cls(dim, generators=np.zeros((0, dim)))

    # -- membership -----------------------------------------------------

    def is_origin(self) -> bool:
        return self.generators is not None and len(self.generators) == 0

    def contains(self, x, tol: float = DEFAULTS.membership_tol) -> bool:
        x = np.asarray(x, dtype=float)
        scale = max(1.0, float(np.linalg.norm(x)))
        w = x / scale
        if self.halfspace is not None:
            if self.halfspace.shape[0] == 0:
                return True
            return bool(np.all(self.halfspace @ w <= tol))
        return self.distance(w) <= tol

    def contains_many(self, points: np.ndarray, tol: float = DEFAULTS.membership_tol) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        scales = np.maximum(1.0, np.linalg.norm(points, axis=1))
        w = points / scales[:, None]
        if self.halfspace is not None:
            if self.halfspace.shape[0] == 0:
                return np.ones(len(points), dtype=bool)
            return np.all(w @ self.halfspace.T <= tol, axis=1)
        return np.array([self.distance(row) <= tol for row in w])

    def distance(self, x) -> float:
        """Euclidean distance from ``x`` to the cone (generator view)."""
        gens = self.require_generators()
        x = np.asarray(x, dtype=float)
        if len(gens) == 0:
            return float(np.linalg.norm(x))
        _, resid = nnls(gens.T, x)
        return float(resid)

    def require_generators(self) -> np.ndarray:
        if self.generators is None:
            if self.dim > 3:
                raise DimensionTooLarge(
                    f"generator reconstruction needs dim <= 3, got {self.dim}"
                )
            self.generators = _generators_of_halfspace(self.halfspace, self.dim)
        return self.generators

    def require_halfspace(self) -> np.ndarray:
        if self.halfspace is None:
            if self.dim > 3:
                raise DimensionTooLarge(
                    f"half-space reconstruction needs dim <= 3, got {self.dim}"
                )
            # rows of the half-space view are exactly the polar's generators
            self.halfspace = _generators_of_halfspace(self.generators, self.dim)
        return self.halfspace

    def views_agree(self, samples: int = 10_000, tol: float = DEFAULTS.membership_tol,
                    seed: int = 0) -> bool:
        if self.generators is None or self.halfspace is None:
            return True
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(samples, self.dim))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        if self.halfspace.shape[0]:
            in_h = np.all(pts @ self.halfspace.T <= tol, axis=1)
        else:
            in_h = np.ones(samples, dtype=bool)
        in_g = np.array([self.distance(p) <= 10 * tol for p in pts])
        # disagreements right on the boundary are sampling noise
        border = np.zeros(samples, dtype=bool)
        if self.halfspace.shape[0]:
            border = np.any(np.abs(pts @ self.halfspace.T) <= 10 * tol, axis=1)
        return bool(np.all(in_h[~border] == in_g[~border]))

    def __repr__(self):
        g = "?" if self.generators is None else len(self.generators)
        h = "?" if self.halfspace is None else len(self.halfspace)
        return f"PolyhedralCone(dim={self.dim}, generators={g}, halfspace_rows={h})"


# ---------------------------------------------------------------------------
# half-space -> generator reconstruction (dim <= 3)


def _generators_of_halfspace(rows: np.ndarray, dim: int) -> np.ndarray:
    """Unit generators of ``{u : rows @ u <= 0}`` for dim <= 3."""
    rows = _unit_rows(rows) if rows is not None else np.zeros((0, dim))
    if rows.shape[0] == 0:
        eye = np.eye(dim)
        return np.vstack([eye, -eye])
    if dim == 1:
        has_pos = bool(np.any(rows[:, 0] > 0))
        has_neg = bool(np.any(rows[:, 0] < 0))
        if has_pos and has_neg:
            return np.zeros((0, 1))
        return np.array([[-1.0]]) if has_pos else np.array([[1.0]])
    if dim == 2:
        candidates = []
        for a in rows:
            r = np.array([-a[1], a[0]])
            candidates.extend([r, -r, -a])
    elif dim == 3:
        candidates = [-a for a in rows]
        for a in rows:
            b1, b2 = _orthobasis(a)
            candidates.extend([b1, -b1, b2, -b2])
        for a, b in itertools.combinations(rows, 2):
            cr = np.cross(a, b)
            if np.linalg.norm(cr) > 1e-12:
                candidates.extend([cr, -cr])
                for c in rows:
                    edge = np.cross(cr, c)
                    if np.linalg.norm(edge) > 1e-12:
                        candidates.extend([edge, -edge])
        for a, b in itertools.permutations(rows, 2):
            proj = b - np.dot(b, a) * a
            if np.linalg.norm(proj) > 1e-12:
                candidates.append(-proj)
        candidates.append(-rows.sum(axis=0))
    else:
        raise DimensionTooLarge(f"generator reconstruction needs dim <= 3, got {dim}")
    cand = _unit_rows(np.array(candidates))
    if cand.shape[0] == 0:
        return np.zeros((0, dim))
    keep = cand[np.all(cand @ rows.T <= _FILTER_TOL, axis=1)]
    keep = _dedup_rows(keep)
    return _prune_conic(keep)


def _orthobasis(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pick = np.eye(3)[np.argmin(np.abs(a))]
    b1 = np.cross(a, pick)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(a, b1)
    b2 /= np.linalg.norm(b2)
    return b1, b2


def _prune_conic(gens: np.ndarray) -> np.ndarray:
    """Drop generators already in the conic hull of the others."""
    if len(gens) <= 1:
        return gens
    keep = list(range(len(gens)))
    changed = True
    while changed:
        changed = False
        for idx in list(keep):
            others = [j for j in keep if j != idx]
            if not others:
                continue
            _, resid = nnls(gens[others].T, gens[idx])
            if resid <= 1e-9:
                keep.remove(idx)
                changed = True
    return gens[keep]


# ---------------------------------------------------------------------------
# polar cones, pointedness, margins


def polar_cone(cone: PolyhedralCone) -> PolyhedralCone:
    """Polar ``{u : <u, v> <= 0 for all v in cone}``.

    The half-space view is the primal generators; the generator view is
    reconstructed for dim <= 3 and left absent otherwise.
    """
    gens = cone.require_generators() if cone.generators is None else cone.generators
    dim = cone.dim
    if len(gens) == 0:
        return PolyhedralCone.full_space(dim)
    out = PolyhedralCone(dim, halfspace=gens.copy())
    if dim <= 3:
        out.generators = _generators_of_halfspace(out.halfspace, dim)
    return out


def is_pointed(cone: PolyhedralCone) -> bool:
    """True iff the cone contains no line."""
    gens = cone.require_generators()
    if len(gens) == 0:
        return True
    res = linprog(
        c=np.zeros(cone.dim),
        A_ub=-gens,
        b_ub=-np.ones(len(gens)),
        bounds=[(None, None)] * cone.dim,
        method="highs",
    )
    return bool(res.status == 0)


@dataclass
class RaySet:
    rays: np.ndarray            # unit rows
    resolution: int
    spacing: float              # radians between neighbouring grid rays

    def __len__(self):
        return len(self.rays)


def sphere_rays(cones, resolution: int = DEFAULTS.ray_resolution) -> RaySet:
    """Deterministic unit rays covering ``union(cones) ∩ S^{n-1}``.

    ``resolution`` counts angular steps per quarter arc; generators are
    always included; near-duplicates (closer than half the grid spacing)
    are dropped.
    """
    comps = _as_components(cones)
    dim = comps[0].dim
    spacing = (math.pi / 2) / max(1, resolution)
    rays: list[np.ndarray] = []
    if dim == 1:
        candidates = np.array([[1.0], [-1.0]])
    elif dim == 2:
        count = int(round(2 * math.pi / spacing))
        theta = np.arange(count) * (2 * math.pi / count)
        candidates = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    elif dim == 3:
        count = max(200, int(16 * resolution * resolution / math.pi))
        candidates = _fibonacci_sphere(count)
    else:
        raise DimensionTooLarge(f"sphere rays need dim <= 3, got {dim}")
    mask = np.zeros(len(candidates), dtype=bool)
    for comp in comps:
        if comp.is_origin():
            continue
        mask |= comp.contains_many(candidates)
    kept = [row for row in candidates[mask]]
    for comp in comps:
        gens = comp.require_generators()
        kept.extend(gens)
    unique: list[np.ndarray] = []
    for row in kept:
        if all(_angle_between(row, u) >= spacing / 2 for u in unique):
            unique.append(row)
    # re-add generators dropped by the dedup pass in favour of grid rays
    for comp in comps:
        for g in comp.require_generators():
            if all(_angle_between(g, u) > 1e-12 for u in unique):
                close = [i for i, u in enumerate(unique) if _angle_between(g, u) < spacing / 2]
                for i in sorted(close, reverse=True):
                    unique.pop(i)
                unique.append(g)
    if not unique:
        return RaySet(rays=np.zeros((0, dim)), resolution=resolution, spacing=spacing)
    arr = np.array(sorted(unique, key=tuple))
    if dim == 2:
        arr = arr[np.argsort(np.mod(np.arctan2(arr[:, 1], arr[:, 0]), 2 * math.pi))]
    return RaySet(rays=arr, resolution=resolution, spacing=spacing)


def _angle_between(a, b) -> float:
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    z = 1.0 - 2.0 * (i + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _as_components(cones) -> list[PolyhedralCone]:
    if isinstance(cones, PolyhedralCone):
        return [cones]
    comps = list(cones)
    if not comps:
        raise ValueError("empty cone union")
    return comps


def interior_margin(cones, u, resolution: int = DEFAULTS.ray_resolution) -> float:
    """``-max <u, v>`` over unit rays of the union; positive iff ``u``
    lies in the interior of the union's polar.  Origin cone -> +inf."""
    u = np.asarray(u, dtype=float)
    rays = sphere_rays(cones, resolution).rays
    if len(rays) == 0:
        return math.inf
    return float(-np.max(rays @ u))


def union_distance(cones, w) -> float:
    comps = _as_components(cones)
    return min(comp.distance(w) for comp in comps)


def union_contains(cones, x, tol: float = DEFAULTS.membership_tol) -> bool:
    return any(comp.contains(x, tol) for comp in _as_components(cones))


# ---------------------------------------------------------------------------
# feasible sets


@dataclass
class Piece:
    """One piece of a feasible-set union: ``A x <= b`` plus smooth
    constraints ``g(x) <= 0``."""

    linear_A: np.ndarray | None = None
    linear_b: np.ndarray | None = None
    smooth: tuple[Expr, ...] = ()

    def __post_init__(self):
        if self.linear_A is not None:
            self.linear_A = np.atleast_2d(np.asarray(self.linear_A, dtype=float))
            self.linear_b = np.asarray(self.linear_b, dtype=float).reshape(-1)
            if self.linear_A.shape[0] != self.linear_b.shape[0]:
                raise ValueError("linear piece rows and bounds disagree")
        self.smooth = tuple(self.smooth)

    @property
    def purely_linear(self) -> bool:
        return not self.smooth and self.linear_A is not None

    def satisfied(self, x, tol: float) -> bool:
        x = np.asarray(x, dtype=float)
        if self.linear_A is not None:
            if np.any(self.linear_A @ x - self.linear_b > tol):
                return False
        for g in self.smooth:
            try:
                if evaluate(g, x) > tol:
                    return False
            except DomainError:
                return False
        return True

    def satisfied_many(self, points: np.ndarray, tol: float) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        mask = np.ones(len(points), dtype=bool)
        if self.linear_A is not None:
            mask &= np.all(points @ self.linear_A.T - self.linear_b <= tol, axis=1)
        for g in self.smooth:
            vals = eval_many(g, points)
            with np.errstate(invalid="ignore"):
                mask &= np.isfinite(vals) & (vals <= tol)
        return mask


@dataclass
class SetDescription:
    """Feasible set ``K``: a union of pieces inside an ambient cone."""

    dim: int
    ambient: PolyhedralCone
    pieces: tuple[Piece, ...]
    declared_asymptotic: tuple[PolyhedralCone, ...] | None = None
    convex: bool = False

    def __post_init__(self):
        self.pieces = tuple(self.pieces)
        if not self.pieces:
            raise ValueError("a feasible set needs at least one piece")


def contains(s: SetDescription, x, tol: float = DEFAULTS.membership_tol) -> bool:
    return any(piece.satisfied(x, tol) for piece in s.pieces)


def contains_many(s: SetDescription, points: np.ndarray,
                  tol: float = DEFAULTS.membership_tol) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    mask = np.zeros(len(points), dtype=bool)
    for piece in s.pieces:
        mask |= piece.satisfied_many(points, tol)
    return mask


def ambient_box(s: SetDescription, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Axis box covering the ambient cone up to ``radius``: axes on which
    the ambient is nonnegative start at zero."""
    gens = s.ambient.require_generators()
    lows = np.full(s.dim, -radius)
    for i in range(s.dim):
        if len(gens) == 0 or np.all(gens[:, i] >= -1e-12):
            lows[i] = 0.0
    highs = np.full(s.dim, radius)
    return lows, highs


def feasible_grid(s: SetDescription, radius: float,
                  resolution: int = DEFAULTS.grid_resolution) -> np.ndarray:
    lows, highs = ambient_box(s, radius)
    pts = grid_points(lows, highs, resolution)
    return pts[contains_many(s, pts)]


# ---------------------------------------------------------------------------
# asymptotic cones


def asymptotic_cone(s: SetDescription,
                    probe_boxes: Sequence[float] = DEFAULTS.probe_boxes,
                    probe_resolution: int = DEFAULTS.probe_resolution,
                    ) -> list[PolyhedralCone]:
    """Union components of the asymptotic cone of ``K``.

    Purely linear pieces map to ``{v : A v <= 0}`` exactly; pieces the
    box probe finds bounded map to the origin; anything else must be
    covered by a declared cone or the computation refuses.
    """
    if s.declared_asymptotic is not None:
        return list(s.declared_asymptotic)
    comps: list[PolyhedralCone] = []
    for idx, piece in enumerate(s.pieces):
        if piece.purely_linear:
            comps.append(PolyhedralCone.from_halfspace(piece.linear_A, s.dim))
        elif _piece_probe_bounded(s, piece, probe_boxes, probe_resolution):
            comps.append(PolyhedralCone.origin(s.dim))
        else:
            raise Undeclared(
                f"piece {idx} is unbounded with smooth constraints; "
                "declare its asymptotic cone in the problem file"
            )
    return _dedup_union(comps, s.dim)


def _piece_probe_bounded(s: SetDescription, piece: Piece,
                         boxes: Sequence[float], resolution: int) -> bool:
    tol = DEFAULTS.membership_tol
    worst = 0.0
    found_any = False
    for radius in boxes:
        lows, highs = ambient_box(s, radius)
        pts = grid_points(lows, highs, resolution)
        mask = piece.satisfied_many(pts, tol)
        if np.any(mask):
            found_any = True
            worst = max(worst, float(np.max(np.linalg.norm(pts[mask], axis=1))))
    if not found_any:
        # nothing visible at any scale: treat as bounded-but-thin
        return True
    return worst <= DEFAULTS.bounded_fraction * max(boxes)


def _dedup_union(comps: list[PolyhedralCone], dim: int) -> list[PolyhedralCone]:
    kept: list[PolyhedralCone] = []
    for cone in comps:
        absorbed = False
        for other in kept:
            if _cone_subset(cone, other):
                absorbed = True
                break
        if not absorbed:
            kept = [k for k in kept if not _cone_subset(k, cone)]
            kept.append(cone)
    if not kept:
        kept = [PolyhedralCone.origin(dim)]
    return kept


def _cone_subset(inner: PolyhedralCone, outer: PolyhedralCone) -> bool:
    gens = inner.require_generators()
    if len(gens) == 0:
        return True
    return all(outer.contains(g, 1e-9) for g in gens)


def validate_asymptotic_cone(
    s: SetDescription,
    cones,
    scales: Sequence[float] = DEFAULTS.validate_scales,
    escape_tol: float = DEFAULTS.escape_tol,
) -> ValidationVerdict:
    """Two-sided numeric check of a claimed asymptotic cone.

    Realization: every generator must be approached by feasible points,
    ``|x_t / t - v| <= eta(t)`` with shrinking slack.  No-escape: every
    sampled far-out feasible direction must lie within ``escape_tol`` of
    the claimed union.
    """
    comps = _as_components(cones)
    offenders = []
    worst_realize = -math.inf
    worst_escape = 0.0
    far_points: list[np.ndarray] = []
    found_any_feasible = False
    for comp in comps:
        for v in comp.require_generators():
            for t in scales:
                eta = realization_eta(t)
                hit = realize_direction(s, v, t)
                if hit is None:
                    continue
                x, dist = hit
                found_any_feasible = True
                deficit = dist - eta
                if deficit > worst_realize:
                    worst_realize = deficit
                if deficit > 0:
                    offenders.append({
                        "kind": "realization",
                        "generator": [float(c) for c in v],
                        "scale": t,
                        "distance": dist,
                        "allowed": eta,
                    })
                else:
                    far_points.append(x)
    if not found_any_feasible and any(len(c.require_generators()) for c in comps):
        raise OracleFailure("no feasible points found at any validation scale")
    # no-escape side: sweep feasible samples at each scale
    for t in scales:
        pts = feasible_grid(s, 2 * t)
        if len(pts) == 0:
            continue
        norms = np.linalg.norm(pts, axis=1)
        far = pts[norms >= 0.8 * t]
        far_points.extend(list(far[:200]))
    for x in far_points:
        nx = float(np.linalg.norm(x))
        if nx < 1.0:
            continue
        d = union_distance(comps, np.asarray(x) / nx)
        if d > worst_escape:
            worst_escape = d
            if d > escape_tol:
                offenders.append({
                    "kind": "escape",
                    "point": [float(c) for c in x],
                    "distance": d,
                    "allowed": escape_tol,
                })
    realize_ok = worst_realize <= 0 or worst_realize == -math.inf
    escape_ok = worst_escape <= escape_tol
    stat = max(worst_realize if worst_realize != -math.inf else 0.0,
               worst_escape - escape_tol)
    return ValidationVerdict(
        check="asymptotic_cone",
        passed=bool(realize_ok and escape_ok),
        statistic=float(stat),
        threshold=0.0,
        offenders=tuple(offenders[:5]),
        params={
            "scales": [float(t) for t in scales],
            "eta": [realization_eta(t) for t in scales],
            "escape_tol": escape_tol,
            "far_samples": len(far_points),
        },
    )


def realize_direction(s: SetDescription, v, t: float,
                      resolution: int = DEFAULTS.grid_resolution,
                      max_evals: int = 20_000):
    """Feasible ``x`` minimizing ``|x/t - v|``; returns (x, distance) or
    None when not even a seed exists."""
    v = np.asarray(v, dtype=float)
    tol = DEFAULTS.membership_tol

    def objective(x):
        return float(np.linalg.norm(x / t - v))

    def feasible(x):
        return contains(s, x, tol)

    pts = feasible_grid(s, 2 * t, resolution)
    seeds: list[np.ndarray] = []
    if len(pts):
        dists = np.linalg.norm(pts / t - v, axis=1)
        order = np.argsort(dists, kind="stable")
        seeds.extend(pts[order[:3]])
    if not seeds:
        return None
    best = None
    for seed in seeds:
        res = pattern_search(objective, feasible, seed, step=t / 4,
                             min_step=max(1e-9, 1e-8 * t), max_evals=max_evals)
        if best is None or (res.value, tuple(res.x)) < (best.value, tuple(best.x)):
            best = res
    return best.x, best.value


def is_cone_set(s: SetDescription, tol: float = 1e-12) -> bool:
    """True when every piece is linear homogeneous (so K is a cone)."""
    for piece in s.pieces:
        if piece.smooth:
            return False
        if piece.linear_b is not None and np.any(np.abs(piece.linear_b) > tol):
            return False
    return True

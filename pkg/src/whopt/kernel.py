"""Kernel of a weakly homogeneous problem: the zero set of the
asymptotic part over the asymptotic cone.

The kernel drives every existence route: empty means no solutions at
all, trivial (origin only) certifies a nonempty bounded solution set,
and a nontrivial kernel is the input to the condition-(a) and
polar-interior routes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import DEFAULTS
from .errors import DomainError, KernelEmpty
from .expr import Expr, evaluate
from .geometry import PolyhedralCone, _as_components, sphere_rays
from .verdicts import _round_rec

TRIVIAL = "Trivial"
NONTRIVIAL = "Nontrivial"
EMPTY = "Empty"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class KernelReport:
    classification: str
    mu: float                 # minimum of the asymptotic part on the sphere slice
    epsilon: float            # zero band: scale-relative tolerance used
    rays: tuple = ()          # unit rays spanning the near-zero set
    ray_values: tuple = ()
    cone: PolyhedralCone | None = None
    resolution: int = DEFAULTS.kernel_resolution
    alpha: str = ""
    scale: float = 1.0        # max |h| over sampled rays
    notes: tuple = ()

    def to_dict(self) -> dict:
        return _round_rec({
            "classification": self.classification,
            "mu": self.mu,
            "epsilon": self.epsilon,
            "rays": [[float(c) for c in r] for r in self.rays],
            "ray_values": [float(v) for v in self.ray_values],
            "resolution": self.resolution,
            "alpha": self.alpha,
            "scale": self.scale,
            "notes": list(self.notes),
        })


def compute_kernel(
    h: Expr,
    cones,
    alpha: Fraction | float = 1,
    resolution: int = DEFAULTS.kernel_resolution,
    eps_rel: float = DEFAULTS.kernel_eps_rel,
) -> KernelReport:
    """Classify the zero set of ``h`` on ``union(cones) ∩ S^{n-1}``.

    Grid rays first, then golden-section refinement inside each arc
    around every local minimum (dimension 2).  The reported cone is the
    conic hull of the near-zero rays, an under-approximation when the
    true zero set curves between grid rays.
    """
    comps = _as_components(cones)
    notes: list[str] = []
    samples: list[tuple[float, np.ndarray]] = []
    spacing = (math.pi / 2) / max(1, resolution)
    for comp in comps:
        rays = sphere_rays(comp, resolution).rays
        if len(rays) == 0:
            continue
        values = []
        for v in rays:
            values.append(_h_value(h, v, notes))
        samples.extend(zip(values, rays))
        if comp.dim == 2 and len(rays) >= 2:
            samples.extend(_refine_minima_2d(h, rays, values, notes))
    if not samples:
        return KernelReport(
            classification=TRIVIAL,
            mu=math.inf,
            epsilon=0.0,
            resolution=resolution,
            alpha=str(alpha),
            notes=("asymptotic cone is the origin; kernel is trivially {0}",),
        )
    finite = [v for v, _ in samples if math.isfinite(v)]
    if not finite:
        return KernelReport(
            classification=EMPTY,
            mu=math.inf,
            epsilon=0.0,
            resolution=resolution,
            alpha=str(alpha),
            notes=tuple(notes) + ("asymptotic part undefined on every sampled ray",),
        )
    scale = max(abs(v) for v in finite)
    eps = eps_rel * max(1.0, scale)
    mu = min(finite)
    if mu < -eps:
        return KernelReport(
            classification=EMPTY,
            mu=mu,
            epsilon=eps,
            resolution=resolution,
            alpha=str(alpha),
            scale=scale,
            notes=tuple(notes),
        )
    if mu > eps:
        return KernelReport(
            classification=TRIVIAL,
            mu=mu,
            epsilon=eps,
            resolution=resolution,
            alpha=str(alpha),
            scale=scale,
            notes=tuple(notes),
        )
    near = [(v, r) for v, r in samples if math.isfinite(v) and abs(v) <= eps]
    rays, values = _cluster_rays(near, spacing)
    cone = PolyhedralCone.from_generators(np.array(rays), comps[0].dim)
    if comps[0].dim == 2 and len(rays) < len(near):
        notes.append("flat zero arc spanned by its extreme rays")
    notes.append("reported kernel cone under-approximates curved zero sets")
    return KernelReport(
        classification=NONTRIVIAL,
        mu=mu,
        epsilon=eps,
        rays=tuple(np.asarray(r) for r in rays),
        ray_values=tuple(values),
        cone=cone,
        resolution=resolution,
        alpha=str(alpha),
        scale=scale,
        notes=tuple(notes),
    )


def _h_value(h: Expr, v: np.ndarray, notes: list[str]) -> float:
    try:
        return float(evaluate(h, v))
    except DomainError:
        if not notes or not notes[-1].startswith("asymptotic part undefined"):
            notes.append(f"asymptotic part undefined at ray {v.tolist()}")
        return math.inf


def _refine_minima_2d(h, rays, values, notes):
    angles = np.mod(np.arctan2(rays[:, 1], rays[:, 0]), 2 * math.pi)
    order = np.argsort(angles)
    angles, vals = angles[order], np.asarray(values)[order]
    out = []
    m = len(angles)
    for i in range(m):
        lo = angles[i - 1] if i > 0 else angles[0]
        hi = angles[i + 1] if i < m - 1 else angles[m - 1]
        left = vals[i - 1] if i > 0 else math.inf
        right = vals[i + 1] if i < m - 1 else math.inf
        if math.isfinite(vals[i]) and vals[i] <= left and vals[i] <= right:
            theta = _golden_section(lambda t: _eval_angle(h, t), lo, hi)
            ray = np.array([math.cos(theta), math.sin(theta)])
            out.append((_h_value(h, ray, notes), ray))
    return out


def _eval_angle(h, theta) -> float:
    try:
        return float(evaluate(h, (math.cos(theta), math.sin(theta))))
    except DomainError:
        return math.inf


def _golden_section(fn, a, b, iters: int = 80) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if b - a < 1e-13:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return (a + b) / 2


def _cluster_rays(near, spacing):
    """Angular clustering; each flat cluster is spanned by its extreme
    rays, an isolated zero by its best refined ray."""
    if not near:
        return [], []
    dim = near[0][1].shape[0]
    if dim != 2:
        rays = [r for _, r in near]
        vals = [v for v, _ in near]
        return rays, vals
    items = sorted(near, key=lambda vr: math.atan2(vr[1][1], vr[1][0]))
    clusters: list[list[tuple[float, np.ndarray]]] = [[items[0]]]
    for v, r in items[1:]:
        prev = clusters[-1][-1][1]
        gap = math.atan2(r[1], r[0]) - math.atan2(prev[1], prev[0])
        if gap <= 2 * spacing + 1e-12:
            clusters[-1].append((v, r))
        else:
            clusters.append([(v, r)])
    rays, vals = [], []

    def push(v, r):
        for seen in rays:
            if _angle_gap(seen, r) < 1e-9:
                return
        rays.append(r)
        vals.append(v)

    for cluster in clusters:
        if len(cluster) == 1:
            push(*cluster[0])
            continue
        lo = min(cluster, key=lambda vr: math.atan2(vr[1][1], vr[1][0]))
        hi = max(cluster, key=lambda vr: math.atan2(vr[1][1], vr[1][0]))
        best = min(cluster, key=lambda vr: vr[0])
        for v, r in (lo, best, hi):
            push(v, r)
    return rays, vals


def _angle_gap(a, b) -> float:
    return abs(math.atan2(a[1], a[0]) - math.atan2(b[1], b[0]))


def kernel_polar_interior_contains(
    report: KernelReport,
    u,
    delta: float = DEFAULTS.witness_delta,
) -> tuple[float, bool]:
    """Margin of ``u`` against the kernel's polar interior:
    ``-max <u, v>`` over kernel rays.  Certified when margin > delta."""
    if report.classification == EMPTY:
        raise KernelEmpty("kernel is empty; the polar-interior route does not apply")
    u = np.asarray(u, dtype=float)
    if report.classification == TRIVIAL:
        return math.inf, True
    rays = list(report.rays)
    if report.cone is not None:
        rays.extend(report.cone.require_generators())
    margin = float(-max(float(np.dot(u, r)) for r in rays))
    return margin, margin > delta

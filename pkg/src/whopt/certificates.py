"""Witness-carrying existence certificates.

Four routes are implemented, each yielding a Certificate whose
witnesses can be re-verified independently:

- trivial kernel: empty escape set, so the solution set is nonempty
  and bounded with no convexity hypothesis;
- condition (a): for a convex problem with a nontrivial kernel, a
  strict-ascent witness per kernel ray certifies nonempty and compact,
  and a verified flat feasible ray refutes compactness;
- domain interior: per-direction witnesses placing a linear shift u in
  the interior of the gradient-range set, again giving nonempty and
  compact solution sets for the shifted problem;
- parametric: combines the kernel-polar and domain-interior routes for
  the shifted objective f - <u, x> and reports both verdicts.

Negative searches are reported NotCertified, never as refutations; a
truncated search cannot prove that no witness exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analysis import (
    ProblemSpec,
    SampleRegion,
    check_pseudoconvexity,
    check_set_convexity,
    fd_gradient,
    lower_bound_probe,
)
from .config import DEFAULTS
from .errors import (
    DegreeTooSmall,
    DomainError,
    EmptyRaySet,
    KernelEmpty,
    SearchInconclusive,
)
from .expr import Expr, evaluate, gradient, gradient_exprs, eval_many
from .geometry import (
    SetDescription,
    ambient_box,
    asymptotic_cone,
    contains,
    contains_many,
    sphere_rays,
)
from .kernel import (
    EMPTY,
    NONTRIVIAL,
    TRIVIAL,
    KernelReport,
    compute_kernel,
    kernel_polar_interior_contains,
)
from .search import grid_points, pattern_search
from .verdicts import ValidationVerdict, _round_rec

TRIVIAL_KERNEL = "TrivialKernel"
CONDITION_A = "PseudoconvexConditionA"
KERNEL_POLAR = "KernelPolarRoute"
DOMAIN_INTERIOR = "DomainInterior"
UNBOUNDED_SOLUTIONS = "UnboundedSolutionSet"
NOT_CERTIFIED = "NotCertified"


@dataclass(frozen=True)
class Witness:
    """One verified inequality: <grad f(x) - u, ray> = margin >= delta,
    cross-checked by finite differences (fd_margin)."""

    ray: tuple[float, ...]
    x: tuple[float, ...]
    margin: float
    fd_margin: float | None = None

    def to_dict(self) -> dict:
        return _round_rec({
            "ray": list(self.ray),
            "x": list(self.x),
            "margin": self.margin,
            "fd_margin": self.fd_margin,
        })


@dataclass
class Certificate:
    kind: str
    conclusion: str
    hypotheses: tuple[ValidationVerdict, ...] = ()
    witnesses: tuple[Witness, ...] = ()
    params: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.kind != NOT_CERTIFIED

    def to_dict(self) -> dict:
        return _round_rec({
            "kind": self.kind,
            "certified": self.certified,
            "conclusion": self.conclusion,
            "hypotheses": [v.to_dict() for v in self.hypotheses],
            "witnesses": [w.to_dict() for w in self.witnesses],
            "params": self.params,
        })


def problem_region(p: ProblemSpec,
                   lo: float = DEFAULTS.region_lo,
                   hi: float = DEFAULTS.region_hi) -> SampleRegion:
    """Sampling region for hypothesis spot-checks: the feasible set
    intersected with [lo, hi]^n (lo kept positive to stay clear of
    fractional-power boundaries)."""
    lows, highs = ambient_box(p.feasible_set, hi)
    lows = np.maximum(lows, np.where(lows >= 0.0, lo, -hi))
    return SampleRegion(lows, highs, member_of=p.feasible_set)


def certify_trivial_kernel(
    p: ProblemSpec,
    cones=None,
    kernel_report: KernelReport | None = None,
    hypotheses: tuple[ValidationVerdict, ...] = (),
) -> Certificate:
    """Bounded nonempty solution set from a trivial kernel.  Requires
    no convexity.  A nontrivial kernel yields NotCertified; an empty
    kernel yields NotCertified with the (stronger) conclusion that the
    solution set is empty because the objective escapes to -inf."""
    if kernel_report is None:
        if cones is None:
            cones = asymptotic_cone(p.feasible_set)
        kernel_report = compute_kernel(p.asymptotic, cones, p.alpha)
    params = {"kernel": kernel_report.to_dict()}
    if kernel_report.classification == TRIVIAL:
        return Certificate(
            kind=TRIVIAL_KERNEL,
            conclusion="solution set nonempty and bounded "
                       "(no escape direction has a nonpositive asymptotic value)",
            hypotheses=hypotheses,
            params=params,
        )
    if kernel_report.classification == EMPTY:
        return Certificate(
            kind=NOT_CERTIFIED,
            conclusion="solution set empty: the asymptotic function is "
                       "negative along a feasible escape direction, so the "
                       "objective is unbounded below",
            hypotheses=hypotheses,
            params=params,
        )
    return Certificate(
        kind=NOT_CERTIFIED,
        conclusion="kernel nontrivial: boundedness is not decided by the "
                   "kernel alone; try the condition-(a) certificate",
        hypotheses=hypotheses,
        params=params,
    )


class _WitnessEngine:
    """Maximizes x -> <grad f(x) - u, v> over K intersected with a ball,
    reusing previously successful points across rays."""

    def __init__(self, p: ProblemSpec, u=None,
                 radius: float = DEFAULTS.search_radius,
                 delta: float = DEFAULTS.witness_delta):
        self.p = p
        self.s = p.feasible_set
        self.u = None if u is None else np.asarray(u, dtype=float)
        self.radius = float(radius)
        self.delta = float(delta)
        self.grads = gradient_exprs(p.objective, p.n)
        self.cache: list[np.ndarray] = []
        seed_boxes = [b for b in DEFAULTS.probe_boxes if b < radius]
        self.boxes = tuple(seed_boxes) + (self.radius,)

    def pairing(self, x, v) -> float:
        try:
            g = gradient(self.p.objective, x)
        except DomainError:
            return -math.inf
        if not np.all(np.isfinite(g)):
            return -math.inf
        val = float(g @ v)
        if self.u is not None:
            val -= float(self.u @ v)
        return val

    def _fd_margin(self, x, v) -> float:
        try:
            g = fd_gradient(self.p.objective, x)
        except DomainError:
            # difference stencil left the domain: not verifiable here
            return -math.inf
        if not np.all(np.isfinite(g)):
            return -math.inf
        val = float(g @ v)
        if self.u is not None:
            val -= float(self.u @ v)
        return val

    def _feasible(self, x) -> bool:
        return float(np.linalg.norm(x)) <= self.radius * (1 + 1e-12) \
            and contains(self.s, x, DEFAULTS.membership_tol)

    def search(self, v) -> tuple[Witness | None, dict]:
        """Returns (witness, evidence).  evidence carries the best value
        seen so the caller can distinguish flat rays from near misses."""
        v = np.asarray(v, dtype=float)
        shift = 0.0 if self.u is None else float(self.u @ v)
        for x in self.cache:
            m = self.pairing(x, v)
            if m >= self.delta:
                fd = self._fd_margin(x, v)
                if fd >= self.delta / 2:
                    return Witness(tuple(float(c) for c in v),
                                   tuple(float(c) for c in x),
                                   m, fd), {"best": m}
        candidates: list[tuple[float, np.ndarray]] = []
        for box in self.boxes:
            lows, highs = ambient_box(self.s, min(box, self.radius))
            pts = grid_points(lows, highs, 21)
            pts = pts[np.linalg.norm(pts, axis=1) <= self.radius * (1 + 1e-12)]
            mask = contains_many(self.s, pts, DEFAULTS.membership_tol)
            if not np.any(mask):
                continue
            feas = pts[mask]
            vals = np.zeros(len(feas))
            for i, gexpr in enumerate(self.grads):
                if v[i] != 0.0:
                    vals += v[i] * eval_many(gexpr, feas)
            vals = np.where(np.isfinite(vals), vals - shift, -math.inf)
            order = np.argsort(vals, kind="stable")[::-1]
            for k in order[:3]:
                if math.isfinite(vals[k]):
                    candidates.append((float(vals[k]), feas[k]))
        if not candidates:
            return None, {"best": -math.inf, "x": None}
        best_m, best_x = max(candidates, key=lambda mx: mx[0])
        res = pattern_search(
            lambda x: -self.pairing(x, v),
            self._feasible,
            best_x,
            step=self.radius / 8,
            min_step=DEFAULTS.step_floor_rel * self.radius,
        )
        m = -res.value
        if m > best_m:
            best_m, best_x = m, res.x
        candidates.append((m, res.x))
        evidence = {"best": best_m, "x": [float(c) for c in best_x]}
        # strongest pairing first; fall back when the difference stencil
        # cannot confirm a candidate (domain boundary, wild curvature)
        fd_worst = math.inf
        for m, x in sorted(candidates, key=lambda mx: mx[0], reverse=True):
            if m < self.delta:
                break
            fd = self._fd_margin(x, v)
            if fd >= self.delta / 2:
                self.cache.append(np.asarray(x, dtype=float))
                return Witness(tuple(float(c) for c in v),
                               tuple(float(c) for c in x),
                               m, fd), evidence
            fd_worst = min(fd_worst, fd)
        if fd_worst != math.inf:
            evidence["fd_disagreement"] = fd_worst
        return None, evidence


def flat_ray_verified(
    p: ProblemSpec,
    base: np.ndarray,
    v: np.ndarray,
    u=None,
    steps=(1.0, 10.0, 100.0),
    tol: float = 1e-9,
) -> bool:
    """True when the ray base + t*v stays feasible and the (shifted)
    objective never rises above its base value by more than tol."""
    u_vec = None if u is None else np.asarray(u, dtype=float)

    def value(x) -> float:
        try:
            val = evaluate(p.objective, x)
        except DomainError:
            return math.inf
        if u_vec is not None:
            val -= float(u_vec @ x)
        return val

    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    f0 = value(base)
    if not math.isfinite(f0):
        return False
    for t in steps:
        x = base + t * v
        if not contains(p.feasible_set, x, DEFAULTS.membership_tol):
            return False
        if value(x) > f0 + tol:
            return False
    return True


def _convexity_hypotheses(p: ProblemSpec, seed: int = 0):
    flag = ValidationVerdict(
        check="feasible-set-declared-convex",
        passed=bool(p.feasible_set.convex),
        statistic=1.0 if p.feasible_set.convex else 0.0,
        threshold=1.0,
        params={"declared": bool(p.feasible_set.convex)},
    )
    verdicts = [flag]
    if p.feasible_set.convex:
        verdicts.append(check_set_convexity(p.feasible_set, seed=seed))
        verdicts.append(check_pseudoconvexity(
            p.objective, problem_region(p), seed=seed))
    return tuple(verdicts)


def certify_condition_a(
    p: ProblemSpec,
    radius: float = DEFAULTS.search_radius,
    delta: float = DEFAULTS.witness_delta,
    cones=None,
    kernel_report: KernelReport | None = None,
) -> Certificate:
    """Nonempty compact solution set for a convex problem with a
    nontrivial kernel: every kernel ray gets a strict-ascent witness
    x with <grad f(x), v> >= delta.  When a ray shows no ascent at all,
    the flat-ray construction is attempted from a solver minimizer and,
    if verified, refutes compactness (UnboundedSolutionSet)."""
    if cones is None:
        cones = asymptotic_cone(p.feasible_set)
    if kernel_report is None:
        kernel_report = compute_kernel(p.asymptotic, cones, p.alpha)
    if kernel_report.classification == TRIVIAL:
        raise EmptyRaySet(
            "trivial kernel has no rays to witness; "
            "use the trivial-kernel certificate")
    if kernel_report.classification == EMPTY:
        raise KernelEmpty(
            "empty kernel: the objective is unbounded below, "
            "so no compactness certificate applies")
    hypotheses = _convexity_hypotheses(p, seed=p.seed)
    if not all(v.passed for v in hypotheses):
        return Certificate(
            kind=NOT_CERTIFIED,
            conclusion="hypotheses not established "
                       "(convexity or pseudoconvexity spot-check failed)",
            hypotheses=hypotheses,
            params={"kernel": kernel_report.to_dict()},
        )
    rays = _kernel_rays(kernel_report)
    engine = _WitnessEngine(p, u=None, radius=radius, delta=delta)
    witnesses: list[Witness] = []
    minimizer: np.ndarray | None = None
    for v in rays:
        w, evidence = engine.search(v)
        if w is not None:
            witnesses.append(w)
            continue
        if evidence["best"] <= 0.0:
            if minimizer is None:
                minimizer = _solver_minimizer(p)
            if minimizer is not None and flat_ray_verified(p, minimizer, v):
                return Certificate(
                    kind=UNBOUNDED_SOLUTIONS,
                    conclusion="compactness refuted: the objective is flat "
                               "along a feasible kernel ray from a minimizer, "
                               "so the solution set is unbounded",
                    hypotheses=hypotheses,
                    witnesses=(Witness(tuple(float(c) for c in v),
                                       tuple(float(c) for c in minimizer),
                                       0.0),),
                    params={"kernel": kernel_report.to_dict(),
                            "flat_ray": [float(c) for c in v]},
                )
        raise SearchInconclusive(
            f"kernel ray {tuple(float(c) for c in v)}: best pairing "
            f"{evidence['best']:.3e} gave neither a witness (>= {delta}) "
            f"nor verified ray flatness")
    return Certificate(
        kind=CONDITION_A,
        conclusion="solution set nonempty and compact "
                   "(strict ascent witnessed along every kernel ray)",
        hypotheses=hypotheses,
        witnesses=tuple(witnesses),
        params={"kernel": kernel_report.to_dict(),
                "delta": delta, "radius": radius},
    )


def _kernel_rays(report: KernelReport) -> list[np.ndarray]:
    rays = [np.asarray(r, dtype=float) for r in report.rays]
    if report.cone is not None:
        for g in report.cone.require_generators():
            g = np.asarray(g, dtype=float)
            if all(np.linalg.norm(g - r) > 1e-9 for r in rays):
                rays.append(g)
    if not rays:
        raise EmptyRaySet("nontrivial kernel reported no rays")
    return rays


def _solver_minimizer(p: ProblemSpec, u=None):
    from .solver import CONVERGED, solve_expanding

    outcome = solve_expanding(p, u=u)
    if outcome.status == CONVERGED:
        return outcome.x
    return None


def domain_interior_contains(
    p: ProblemSpec,
    u,
    radius: float = DEFAULTS.search_radius,
    delta: float = DEFAULTS.witness_delta,
    cones=None,
    resolution: int = DEFAULTS.domain_resolution,
) -> Certificate:
    """Certifies that u lies interior to the gradient-range set
    grad f(K) + (K-asymptotic)polar by exhibiting, for every sampled
    unit direction v of the asymptotic cone, a feasible x with
    <grad f(x) - u, v> >= delta.  Exhausted searches are NotCertified,
    never refutations."""
    u = np.asarray(u, dtype=float)
    if cones is None:
        cones = asymptotic_cone(p.feasible_set)
    rayset = sphere_rays(cones, resolution)
    if len(rayset) == 0:
        return Certificate(
            kind=DOMAIN_INTERIOR,
            conclusion="vacuously interior: the asymptotic cone is the "
                       "origin, so there is no escape direction to test",
            params={"u": [float(c) for c in u], "rays": 0},
        )
    engine = _WitnessEngine(p, u=u, radius=radius, delta=delta)
    witnesses: list[Witness] = []
    failures: list[dict] = []
    flat_rays: list[list[float]] = []
    for v in rayset.rays:
        w, evidence = engine.search(v)
        if w is not None:
            witnesses.append(w)
            continue
        record = {"ray": [float(c) for c in v], "best": evidence["best"]}
        if len(failures) < 5:
            failures.append(record)
        if evidence["best"] <= 0.0:
            flat_rays.append([float(c) for c in v])
    params = {
        "u": [float(c) for c in u],
        "rays": len(rayset.rays),
        "witnessed": len(witnesses),
        "delta": delta,
        "radius": radius,
        "resolution": resolution,
    }
    if failures:
        params["failures"] = failures
        params["flat_rays"] = flat_rays[:10]
        return Certificate(
            kind=NOT_CERTIFIED,
            conclusion="search exhausted on some directions; interiority "
                       "not established (not a refutation)",
            witnesses=tuple(witnesses),
            params=params,
        )
    return Certificate(
        kind=DOMAIN_INTERIOR,
        conclusion="u interior to the gradient-range set: every asymptotic "
                   "direction has a strict-ascent witness for the shifted "
                   "gradient",
        witnesses=tuple(witnesses),
        params=params,
    )


def certify_parametric(
    p: ProblemSpec,
    u,
    cones=None,
    kernel_report: KernelReport | None = None,
    delta: float = DEFAULTS.witness_delta,
    radius: float = DEFAULTS.search_radius,
) -> Certificate:
    """Existence analysis for the shifted objective f - <u, x>, degree
    alpha > 1 required.  Two independent routes are run and reported:

    - kernel route: objective bounded below (probe) and u strictly
      interior to the kernel's polar cone;
    - domain route: convex hypotheses plus a DomainInterior certificate.

    Either route certifies a nonempty compact solution set.  When the
    domain search instead finds a flat ray and the solver converges, the
    flat-ray construction certifies an unbounded solution set."""
    if p.alpha <= 1:
        raise DegreeTooSmall(
            f"parametric analysis requires homogeneity degree > 1, "
            f"got {p.alpha}")
    u = np.asarray(u, dtype=float)
    if cones is None:
        cones = asymptotic_cone(p.feasible_set)
    if kernel_report is None:
        kernel_report = compute_kernel(p.asymptotic, cones, p.alpha)
    routes: dict[str, dict] = {}
    hypotheses: list[ValidationVerdict] = []

    probe = lower_bound_probe(p.objective, p.feasible_set, u=u)
    hypotheses.append(probe)
    kernel_route = {"bounded_below": bool(probe.passed),
                    "lower_bound": probe.statistic}
    if kernel_report.classification == EMPTY:
        kernel_route.update(certified=False, margin=None,
                            reason="kernel empty: objective unbounded below "
                                   "for every shift")
    else:
        margin, interior = kernel_polar_interior_contains(
            kernel_report, u, delta)
        kernel_route.update(
            margin=margin if math.isfinite(margin) else "inf",
            certified=bool(probe.passed and interior),
        )
        if not interior:
            kernel_route["reason"] = "u not strictly interior to the " \
                                     "kernel polar"
        elif not probe.passed:
            kernel_route["reason"] = "no numeric lower bound found"
    routes["kernel"] = kernel_route

    domain_cert: Certificate | None = None
    if not p.feasible_set.convex:
        routes["domain"] = {"certified": False,
                            "reason": "feasible set not declared convex"}
    else:
        convex_hyp = _convexity_hypotheses(p, seed=p.seed)
        hypotheses.extend(convex_hyp)
        if not all(v.passed for v in convex_hyp):
            routes["domain"] = {"certified": False,
                                "reason": "convexity or pseudoconvexity "
                                          "spot-check failed"}
        else:
            domain_cert = domain_interior_contains(
                p, u, radius=radius, delta=delta, cones=cones)
            routes["domain"] = {
                "certified": domain_cert.certified,
                "witnessed": domain_cert.params.get("witnessed",
                                                    len(domain_cert.witnesses)),
                "rays": domain_cert.params.get("rays"),
            }
            if not domain_cert.certified:
                routes["domain"]["failures"] = \
                    domain_cert.params.get("failures", [])

    unbounded_witness: Witness | None = None
    if domain_cert is not None and not domain_cert.certified:
        flat = domain_cert.params.get("flat_rays") or []
        if flat:
            minimizer = _solver_minimizer(p, u=u)
            if minimizer is not None:
                for v in flat:
                    if flat_ray_verified(p, minimizer, np.asarray(v), u=u):
                        unbounded_witness = Witness(
                            tuple(float(c) for c in v),
                            tuple(float(c) for c in minimizer), 0.0)
                        break

    params = {"u": [float(c) for c in u], "delta": delta, "routes": routes,
              "alpha": str(p.alpha)}
    witnesses = tuple(domain_cert.witnesses) if domain_cert is not None else ()
    if routes["kernel"]["certified"]:
        return Certificate(
            kind=KERNEL_POLAR,
            conclusion="solution set of the shifted problem nonempty and "
                       "compact (bounded below and u interior to the kernel "
                       "polar)",
            hypotheses=tuple(hypotheses),
            witnesses=witnesses,
            params=params,
        )
    if domain_cert is not None and domain_cert.certified:
        return Certificate(
            kind=DOMAIN_INTERIOR,
            conclusion="solution set of the shifted problem nonempty and "
                       "compact (u interior to the gradient-range set under "
                       "convexity)",
            hypotheses=tuple(hypotheses),
            witnesses=witnesses,
            params=params,
        )
    if unbounded_witness is not None:
        return Certificate(
            kind=UNBOUNDED_SOLUTIONS,
            conclusion="solutions exist but the solution set is unbounded "
                       "along a verified flat feasible ray",
            hypotheses=tuple(hypotheses),
            witnesses=(unbounded_witness,),
            params=params,
        )
    return Certificate(
        kind=NOT_CERTIFIED,
        conclusion="neither route certified existence for this shift",
        hypotheses=tuple(hypotheses),
        witnesses=witnesses,
        params=params,
    )

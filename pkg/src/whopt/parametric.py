"""Linear-parameter sweeps and solution-map probes.

The existence region (shifts u whose problem has solutions) is only
approximated: each grid point gets a label from {certified,
solved-only, escaping, indeterminate}, never a bare boolean, because
the implemented criteria are sufficient, not necessary.  The
solution-map probes test the two computable shadows of upper
semicontinuity: local boundedness of solution norms and closedness of
the graph along a convergent sequence.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .analysis import ProblemSpec, check_little_o, realization_points
from .certificates import (
    KERNEL_POLAR,
    NOT_CERTIFIED,
    UNBOUNDED_SOLUTIONS,
    Certificate,
    certify_parametric,
)
from .config import DEFAULTS
from .errors import ConePrecondition, DegreeTooSmall
from .expr import Const, _add
from .geometry import asymptotic_cone, contains, is_cone_set
from .kernel import KernelReport, compute_kernel
from .solver import (
    CONVERGED,
    ESCAPING,
    SolveOutcome,
    kernel_ray_distance,
    minty_check,
    solve_expanding,
    solve_truncated,
)
from .verdicts import ValidationVerdict, _round_rec

CERTIFIED = "certified"
SOLVED_ONLY = "solved-only"
ESCAPING_LABEL = "escaping"
INDETERMINATE_LABEL = "indeterminate"


@dataclass
class SweepRecord:
    u: tuple[float, ...]
    kernel_margin: float | None
    kernel_certified: bool
    domain_certified: bool | None   # None when the route did not run
    certificate_kind: str
    solve_status: str
    solve_norm: float | None
    solve_value: float | None
    final_radius: float
    existence: str
    unbounded_solutions: bool
    evals: int

    def to_dict(self) -> dict:
        return _round_rec({
            "u": list(self.u),
            "kernel_margin": self.kernel_margin,
            "kernel_certified": self.kernel_certified,
            "domain_certified": self.domain_certified,
            "certificate_kind": self.certificate_kind,
            "solve_status": self.solve_status,
            "solve_norm": self.solve_norm,
            "solve_value": self.solve_value,
            "final_radius": self.final_radius,
            "existence": self.existence,
            "unbounded_solutions": self.unbounded_solutions,
            "evals": self.evals,
        })

    def csv_row(self) -> list:
        return [*(float(c) for c in self.u), self.solve_status,
                "" if self.kernel_margin is None else self.kernel_margin,
                "" if self.solve_norm is None else self.solve_norm,
                "" if self.solve_value is None else self.solve_value,
                self.existence]


def _existence_label(cert: Certificate, outcome: SolveOutcome) -> str:
    if cert.kind != NOT_CERTIFIED:
        return CERTIFIED
    if outcome.status == CONVERGED:
        return SOLVED_ONLY
    if outcome.status == ESCAPING:
        return ESCAPING_LABEL
    return INDETERMINATE_LABEL


def sweep(
    p: ProblemSpec,
    u_grid,
    cones=None,
    kernel_report: KernelReport | None = None,
    delta: float = DEFAULTS.witness_delta,
) -> list[SweepRecord]:
    """certify_parametric + solve_expanding at every grid shift, in the
    given (row-major) order."""
    if p.alpha <= 1:
        raise DegreeTooSmall(
            f"parametric sweep requires homogeneity degree > 1, got {p.alpha}")
    if cones is None:
        cones = asymptotic_cone(p.feasible_set)
    if kernel_report is None:
        kernel_report = compute_kernel(p.asymptotic, cones, p.alpha)
    records: list[SweepRecord] = []
    for u in u_grid:
        u = np.asarray(u, dtype=float)
        cert = certify_parametric(p, u, cones=cones,
                                  kernel_report=kernel_report, delta=delta)
        outcome = solve_expanding(p, u=u, kernel_report=kernel_report)
        routes = cert.params["routes"]
        margin = routes["kernel"].get("margin")
        if margin == "inf":
            margin = math.inf
        domain = routes.get("domain", {})
        records.append(SweepRecord(
            u=tuple(float(c) for c in u),
            kernel_margin=margin,
            kernel_certified=bool(routes["kernel"]["certified"]),
            domain_certified=(None if "certified" not in domain
                              else bool(domain["certified"])),
            certificate_kind=cert.kind,
            solve_status=outcome.status,
            solve_norm=outcome.norm if outcome.x is not None else None,
            solve_value=outcome.value if outcome.x is not None else None,
            final_radius=outcome.radius,
            existence=_existence_label(cert, outcome),
            unbounded_solutions=cert.kind == UNBOUNDED_SOLUTIONS,
            evals=outcome.evals,
        ))
    return records


@dataclass
class BoundednessProbe:
    center: tuple[float, ...]
    eps: float
    sup_norm: float | None
    unbounded: bool
    all_converged: bool
    samples: tuple[dict, ...]

    def to_dict(self) -> dict:
        return _round_rec({
            "center": list(self.center),
            "eps": self.eps,
            "sup_norm": self.sup_norm,
            "unbounded": self.unbounded,
            "all_converged": self.all_converged,
            "samples": list(self.samples),
        })


def _ball_samples(center: np.ndarray, eps: float, m: int, seed: int):
    """Center plus m-1 shifts in the closed ball.  In the plane the
    shifts are a deterministic boundary ring (extremes live there for
    monotone maps); higher dimensions fall back to seeded sampling."""
    n = len(center)
    out = [center.copy()]
    if n == 2:
        for j in range(m - 1):
            angle = 2 * math.pi * j / (m - 1)
            out.append(center + eps * np.array([math.cos(angle),
                                                math.sin(angle)]))
    else:
        rng = np.random.default_rng(seed)
        while len(out) < m:
            z = rng.normal(size=n)
            r = rng.uniform() ** (1.0 / n)
            out.append(center + eps * r * z / np.linalg.norm(z))
    return out


def local_boundedness_probe(
    p: ProblemSpec,
    u_center,
    eps: float,
    samples: int = 16,
    seed: int = 0,
    cones=None,
    kernel_report: KernelReport | None = None,
) -> BoundednessProbe:
    """Solves on a ball of shifts around u_center and reports the sup of
    solution norms.  Any escaping sample flags the probe unbounded; any
    indeterminate sample forfeits the boundedness claim."""
    if p.alpha <= 1:
        raise DegreeTooSmall(
            f"boundedness probe requires homogeneity degree > 1, "
            f"got {p.alpha}")
    center = np.asarray(u_center, dtype=float)
    if cones is None:
        cones = asymptotic_cone(p.feasible_set)
    if kernel_report is None:
        kernel_report = compute_kernel(p.asymptotic, cones, p.alpha)
    rows = []
    sup = 0.0
    unbounded = False
    all_converged = True
    for u in _ball_samples(center, float(eps), samples, seed):
        outcome = solve_expanding(p, u=u, kernel_report=kernel_report)
        row = {"u": [float(c) for c in u], "status": outcome.status,
               "norm": outcome.norm if outcome.x is not None else None}
        rows.append(row)
        if outcome.status == CONVERGED:
            sup = max(sup, outcome.norm)
        elif outcome.status == ESCAPING:
            unbounded = True
            all_converged = False
        else:
            all_converged = False
    return BoundednessProbe(
        center=tuple(float(c) for c in center),
        eps=float(eps),
        sup_norm=sup if all_converged else (None if unbounded else sup),
        unbounded=unbounded,
        all_converged=all_converged,
        samples=tuple(rows),
    )


def closed_graph_check(
    p: ProblemSpec,
    shifts,
    points,
    limit_shift,
    limit_point,
    tol: float = DEFAULTS.minty_tol,
) -> ValidationVerdict:
    """Closedness probe for the solution map along a convergent
    sequence: every (u_k, x_k) must pass feasibility plus the
    variational-inequality check, and so must the limit pair."""
    pairs = [(np.asarray(u, dtype=float), np.asarray(x, dtype=float))
             for u, x in zip(shifts, points)]
    pairs.append((np.asarray(limit_shift, dtype=float),
                  np.asarray(limit_point, dtype=float)))
    worst = 0.0
    offenders = []
    checked = 0
    for idx, (u, x) in enumerate(pairs):
        is_limit = idx == len(pairs) - 1
        label = "limit" if is_limit else f"member {idx}"
        if not contains(p.feasible_set, x, DEFAULTS.membership_tol):
            offenders.append({"pair": label, "reason": "infeasible",
                              "x": [float(c) for c in x]})
            continue
        verdict = minty_check(p, x, u=u, tol=tol, seed=p.seed)
        checked += 1
        worst = max(worst, verdict.statistic)
        if not verdict.passed:
            offenders.append({"pair": label,
                              "violation": verdict.statistic,
                              "x": [float(c) for c in x]})
    return ValidationVerdict(
        check="closed-graph",
        passed=not offenders,
        statistic=worst,
        threshold=tol,
        offenders=tuple(offenders[:5]),
        params={"sequence_length": len(pairs) - 1, "checked": checked},
    )


def perturbation_inclusion_test(
    p: ProblemSpec,
    perturbations,
    radii=DEFAULTS.inclusion_radii,
    tol: float = DEFAULTS.inclusion_tol,
    cones=None,
    kernel_report: KernelReport | None = None,
) -> ValidationVerdict:
    """Asymptotic stability of the solution set under small-order
    perturbations on a cone K: solutions of f + q that grow large must
    point along kernel rays of the unperturbed problem.

    Each perturbation q is first validated to be of lower order than
    the homogeneity degree (remainder check against the zero function);
    then the perturbed problem is solved at fixed truncation radii and
    every boundary-scale solution is normalized and matched against the
    kernel ray set."""
    if not is_cone_set(p.feasible_set):
        raise ConePrecondition(
            "perturbation inclusion requires the feasible set to be a cone")
    if cones is None:
        cones = asymptotic_cone(p.feasible_set)
    if kernel_report is None:
        kernel_report = compute_kernel(p.asymptotic, cones, p.alpha)
    points = realization_points(p.feasible_set, cones,
                                DEFAULTS.validate_scales)
    zero = Const(0.0)
    little_o: list[dict] = []
    offenders: list[dict] = []
    cases: list[dict] = []
    worst = 0.0
    large_cut = min(radii) * (1 - 1e-9)
    for i, q in enumerate(perturbations):
        order = check_little_o(q, zero, p.alpha, p.feasible_set, cones,
                               scales=DEFAULTS.validate_scales, points=points)
        little_o.append(order.to_dict())
        if not order.passed:
            offenders.append({"perturbation": i,
                              "reason": "not lower-order than the "
                                        "homogeneity degree"})
            continue
        perturbed = dataclasses.replace(
            p, objective=_add(p.objective, q), label=f"{p.label}+q{i}")
        for radius in radii:
            res = solve_truncated(perturbed, float(radius))
            norm = float(np.linalg.norm(res.x))
            case = {"perturbation": i, "radius": float(radius),
                    "x": [float(c) for c in res.x], "norm": norm}
            if norm >= large_cut:
                dist = kernel_ray_distance(kernel_report, res.x / norm)
                case["kernel_distance"] = dist
                worst = max(worst, dist)
                if dist > tol:
                    offenders.append({"perturbation": i,
                                      "radius": float(radius),
                                      "distance": dist})
            else:
                case["kernel_distance"] = None   # small solution: vacuous
            cases.append(case)
    return ValidationVerdict(
        check="perturbation-inclusion",
        passed=not offenders,
        statistic=worst,
        threshold=tol,
        offenders=tuple(offenders[:5]),
        params={"radii": [float(r) for r in radii],
                "cases": cases, "little_o": little_o},
    )

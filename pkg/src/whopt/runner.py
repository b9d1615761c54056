"""Report builders behind the service and the CLI.

Every command produces one JSON-serializable report with a shared
envelope: report_version, command, problem label, echoed effective
configuration, and a status in {ok, validation_failure}.  Reports are
byte-stable for a fixed seed: floats are rounded to 12 significant
digits, keys are sorted at serialization time, and work is measured in
evaluation counts rather than wall time.
"""

from __future__ import annotations

import dataclasses
import json
from fractions import Fraction

import numpy as np

from .analysis import (
    ProblemSpec,
    asymptotic_agreement,
    check_little_o,
    check_positive_homogeneity,
    check_set_convexity,
    realization_points,
)
from .certificates import (
    NOT_CERTIFIED,
    certify_condition_a,
    certify_trivial_kernel,
)
from .config import DEFAULTS, Defaults
from .errors import BadInput, SearchInconclusive, WhoptError
from .expr import parse
from .geometry import asymptotic_cone, validate_asymptotic_cone
from .kernel import NONTRIVIAL, compute_kernel
from .parametric import local_boundedness_probe, sweep
from .solver import CONVERGED, minty_check, solve_expanding
from .verdicts import _round_rec

REPORT_VERSION = 1


def apply_overrides(overrides: dict | None) -> Defaults:
    """Build an effective configuration from key=value overrides."""
    if not overrides:
        return DEFAULTS
    valid = {f.name: f for f in dataclasses.fields(Defaults)}
    coerced = {}
    for key, raw in overrides.items():
        if key not in valid:
            raise BadInput(f"unknown configuration key at /overrides/{key}",
                           path="<overrides>")
        current = getattr(DEFAULTS, key)
        try:
            if isinstance(current, bool):
                value = str(raw).lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            elif isinstance(current, tuple):
                parts = raw.split(",") if isinstance(raw, str) else raw
                value = tuple(float(v) for v in parts)
            else:
                value = raw
        except (TypeError, ValueError) as exc:
            raise BadInput(f"cannot coerce {raw!r} for configuration key "
                           f"{key} at /overrides/{key}",
                           path="<overrides>") from exc
        coerced[key] = value
    return dataclasses.replace(DEFAULTS, **coerced)


def _envelope(command: str, p: ProblemSpec, config: Defaults) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "command": command,
        "problem": p.label,
        "seed": p.seed,
        "config": dataclasses.asdict(config),
    }


def _with_term(verdict, term: str):
    return dataclasses.replace(verdict,
                               params={**verdict.params, "term": term})


def _cones_for(p: ProblemSpec):
    cones = asymptotic_cone(p.feasible_set)
    source = ("declared" if p.feasible_set.declared_asymptotic is not None
              else "derived")
    return cones, source


def report_validate(p: ProblemSpec, config: Defaults = DEFAULTS) -> dict:
    """Weak-homogeneity gates: the declared asymptotic cone is verified
    (or derived), each homogeneous term is tested for positive
    homogeneity and for a vanishing remainder, alternates must agree on
    the asymptotic cone, and a declared-convex set is spot-checked."""
    if p.asymptotic is None:
        raise BadInput("validate requires an asymptotic term "
                       "at /asymptotic", path=p.label)
    report = _envelope("validate", p, config)
    cones, source = _cones_for(p)
    report["asymptotic_cone"] = {
        "source": source,
        "cones": [[list(map(float, g)) for g in c.require_generators()]
                  for c in cones],
    }
    verdicts = [validate_asymptotic_cone(
        p.feasible_set, cones,
        scales=config.validate_scales, escape_tol=config.escape_tol)]
    terms = [("asymptotic", p.asymptotic)]
    terms += [(f"alternate_{i}", e) for i, e in enumerate(p.alternates)]
    for name, h in terms:
        verdicts.append(_with_term(check_positive_homogeneity(
            h, p.alpha, p.feasible_set.ambient,
            samples=config.homogeneity_samples,
            scales=config.homogeneity_scales,
            seed=p.seed, rtol=config.homogeneity_rtol), name))
    points = realization_points(p.feasible_set, cones,
                                scales=config.littleo_scales,
                                resolution=config.littleo_resolution)
    for name, h in terms:
        verdicts.append(_with_term(check_little_o(
            p.objective, h, p.alpha, p.feasible_set, cones,
            scales=config.littleo_scales, points=points,
            target=config.littleo_target), name))
    for i, alt in enumerate(p.alternates):
        verdicts.append(_with_term(asymptotic_agreement(
            p.asymptotic, alt, cones, tol=config.agreement_tol),
            f"alternate_{i}"))
    if p.feasible_set.convex:
        verdicts.append(check_set_convexity(
            p.feasible_set, midpoints=config.convexity_midpoints,
            seed=p.seed))
    report["verdicts"] = [v.to_dict() for v in verdicts]
    report["status"] = ("ok" if all(v.passed for v in verdicts)
                        else "validation_failure")
    return report


def report_kernel(p: ProblemSpec, config: Defaults = DEFAULTS,
                  alpha_override=None, h_override: str | None = None) -> dict:
    """Kernel of the asymptotic problem, optionally for an overridden
    homogeneous term or degree (for what-if comparisons)."""
    alpha = p.alpha if alpha_override is None else Fraction(alpha_override)
    if h_override is not None:
        h = parse(h_override)
    elif p.asymptotic is not None:
        h = p.asymptotic
    else:
        raise BadInput("kernel requires an asymptotic term at /asymptotic",
                       path=p.label)
    report = _envelope("kernel", p, config)
    cones, source = _cones_for(p)
    kr = compute_kernel(h, cones, alpha,
                        resolution=config.kernel_resolution,
                        eps_rel=config.kernel_eps_rel)
    report["cone_source"] = source
    report["overrides"] = {
        "alpha": None if alpha_override is None else str(alpha),
        "h": h_override,
    }
    report["kernel"] = kr.to_dict()
    report["status"] = "ok"
    return report


def report_certify(p: ProblemSpec, config: Defaults = DEFAULTS) -> dict:
    """Existence certificates for the unshifted problem.  Validation
    gates run first; a failed gate short-circuits with
    status=validation_failure and no certificate."""
    validation = report_validate(p, config)
    report = _envelope("certify", p, config)
    report["validation"] = {
        "status": validation["status"],
        "verdicts": validation["verdicts"],
    }
    if validation["status"] != "ok":
        report["status"] = "validation_failure"
        report["certificates"] = {}
        return report
    cones, _ = _cones_for(p)
    kr = compute_kernel(p.asymptotic, cones, p.alpha,
                        resolution=config.kernel_resolution,
                        eps_rel=config.kernel_eps_rel)
    certificates = {}
    trivial = certify_trivial_kernel(p, cones=cones, kernel_report=kr)
    certificates["trivial_kernel"] = trivial.to_dict()
    headline = trivial
    if kr.classification == NONTRIVIAL:
        if p.feasible_set.convex:
            try:
                cond_a = certify_condition_a(
                    p, radius=config.search_radius,
                    delta=config.witness_delta,
                    cones=cones, kernel_report=kr)
                certificates["condition_a"] = cond_a.to_dict()
                headline = cond_a
            except SearchInconclusive as exc:
                certificates["condition_a"] = {
                    "error": "SearchInconclusive", "message": str(exc)}
        else:
            certificates["condition_a"] = {
                "skipped": "feasible set not declared convex"}
    report["certificates"] = certificates
    report["headline"] = {"kind": headline.kind,
                          "conclusion": headline.conclusion}
    report["status"] = "ok"
    return report


def report_solve(p: ProblemSpec, config: Defaults = DEFAULTS,
                 u=None) -> dict:
    report = _envelope("solve", p, config)
    report["u"] = None if u is None else [float(c) for c in u]
    kernel_report = None
    if p.asymptotic is not None:
        try:
            cones, _ = _cones_for(p)
            kernel_report = compute_kernel(
                p.asymptotic, cones, p.alpha,
                resolution=config.kernel_resolution,
                eps_rel=config.kernel_eps_rel)
        except WhoptError as exc:
            report["kernel_note"] = f"kernel unavailable: {exc}"
    outcome = solve_expanding(
        p, u=u, k0=config.k0, growth=config.growth,
        max_doublings=config.max_doublings, restarts=config.restarts,
        kernel_report=kernel_report)
    report["solve"] = outcome.to_dict()
    if outcome.status == CONVERGED:
        verdict = minty_check(p, outcome.x, u=u,
                              probes=config.minty_probes,
                              seed=p.seed, tol=config.minty_tol)
        report["minty"] = verdict.to_dict()
    report["status"] = "ok"
    return report


def parse_grid(spec: str, n: int) -> list[tuple[float, ...]]:
    """Shift grids: axes separated by ';', each axis either a comma
    list of values or lo:hi:count.  Row-major (last axis fastest)."""
    axes = []
    parts = [part.strip() for part in spec.split(";") if part.strip()]
    if len(parts) != n:
        raise BadInput(f"grid needs {n} axes separated by ';', "
                       f"got {len(parts)} at /grid", path="<grid>")
    for idx, part in enumerate(parts):
        try:
            if ":" in part:
                lo_s, hi_s, count_s = part.split(":")
                lo, hi, count = float(lo_s), float(hi_s), int(count_s)
                if count < 1:
                    raise ValueError("count must be >= 1")
                axes.append([float(v) for v in np.linspace(lo, hi, count)])
            else:
                axes.append([float(v) for v in part.split(",")])
        except ValueError as exc:
            raise BadInput(f"bad grid axis {part!r} at /grid/{idx}",
                           path="<grid>") from exc
    grid: list[tuple[float, ...]] = [()]
    for axis in axes:
        grid = [point + (v,) for point in grid for v in axis]
    return grid


def report_parametric(p: ProblemSpec, grid_spec: str,
                      config: Defaults = DEFAULTS) -> dict:
    grid = parse_grid(grid_spec, p.n)
    report = _envelope("parametric", p, config)
    records = sweep(p, grid, delta=config.witness_delta)
    report["grid"] = {"spec": grid_spec, "points": len(grid)}
    report["sweep"] = [r.to_dict() for r in records]
    report["summary"] = {
        "kernel_certified": sum(1 for r in records if r.kernel_certified),
        "certified": sum(1 for r in records if r.existence == "certified"),
        "converged": sum(1 for r in records
                         if r.solve_status == CONVERGED),
    }
    report["status"] = "ok"
    return report


def report_probe_usc(p: ProblemSpec, center, radius: float,
                     samples: int = DEFAULTS.usc_samples,
                     config: Defaults = DEFAULTS) -> dict:
    report = _envelope("probe-usc", p, config)
    probe = local_boundedness_probe(p, center, radius, samples=samples,
                                    seed=p.seed)
    report["probe"] = probe.to_dict()
    report["status"] = "ok"
    return report


def finalize_report(report: dict) -> str:
    """Canonical bytes: rounded floats, sorted keys, trailing newline."""
    return json.dumps(_round_rec(report), sort_keys=True, indent=2) + "\n"


def sweep_csv(report: dict) -> str:
    """CSV projection of a parametric report for plotting."""
    rows = ["u1,u2,status,kernel_margin,norm,value,existence"
            if report["sweep"] and len(report["sweep"][0]["u"]) == 2
            else "u,status,kernel_margin,norm,value,existence"]
    for rec in report["sweep"]:
        u_part = ",".join(str(c) for c in rec["u"])
        margin = rec["kernel_margin"]
        rows.append(",".join([
            u_part,
            rec["solve_status"],
            "" if margin is None else str(margin),
            "" if rec["solve_norm"] is None else str(rec["solve_norm"]),
            "" if rec["solve_value"] is None else str(rec["solve_value"]),
            rec["existence"],
        ]))
    return "\n".join(rows) + "\n"

"""Default tolerances and search budgets.

Every knob has one home here so reports can echo the effective
configuration and tests can pin the documented values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict


def _sqrt_eta(t: float) -> float:
    # Realization slack shrinks like 1/sqrt(t); 5/sqrt(1e2) = 0.5.
    return 5.0 / math.sqrt(t)


@dataclass(frozen=True)
class Defaults:
    # membership and geometry
    membership_tol: float = 1e-9
    polar_tol: float = 1e-8
    ray_resolution: int = 90           # angular steps per quarter arc
    escape_tol: float = 1e-3           # direction distance in cone validation
    validate_scales: tuple = (1e2, 1e3, 1e4, 1e5)
    probe_boxes: tuple = (8.0, 64.0, 512.0, 4096.0)
    probe_resolution: int = 65
    bounded_fraction: float = 0.05     # max feasible norm vs largest probe box

    # weak homogeneity checks
    homogeneity_rtol: float = 1e-9
    homogeneity_scales: tuple = (2.0, 10.0, 100.0)
    homogeneity_samples: int = 200
    littleo_scales: tuple = (1e2, 1e3, 1e4, 1e5, 1e6)
    littleo_target: float = 1e-3
    littleo_resolution: int = 4        # direction grid for ratio probes
    agreement_tol: float = 1e-9

    # curvature checks
    pseudoconvex_pairs: int = 500
    pseudoconvex_slack: float = 1e-9
    hessian_samples: int = 200
    hessian_psd_tol: float = 1e-9
    region_lo: float = 0.1
    region_hi: float = 100.0
    domain_margin: float = 1e-3        # stay inside fractional-power domains

    # derivative checks
    fd_rel_step: float = 1e-5
    fd_rtol: float = 1e-5
    hessian_sym_tol: float = 1e-12

    # kernel
    kernel_resolution: int = 360
    kernel_eps_rel: float = 1e-6

    # certificates
    witness_delta: float = 1e-6
    search_radius: float = 1e3
    domain_resolution: int = 90
    convexity_midpoints: int = 200

    # solver
    k0: float = 8.0
    growth: float = 2.0
    max_doublings: int = 12
    restarts: int = 8
    grid_resolution: int = 33
    interior_fraction: float = 0.9     # converged iff norm <= fraction * radius
    value_rtol: float = 1e-9
    stable_levels: int = 2             # consecutive small deltas before Converged
    escape_levels: int = 3
    drift_angle: float = 1e-2
    step_floor_rel: float = 1e-9       # pattern search stops at this * radius
    minty_probes: int = 500
    minty_tol: float = 1e-6

    # boundedness probe
    lower_bound_scales: tuple = (1e2, 1e3, 1e4, 1e5, 1e6, 1e7)
    unbounded_drop: float = 1e6

    # oracle
    oracle_max_points: int = 10**7
    refine_rounds: int = 3
    refine_factor: float = 10.0
    refine_resolution: int = 21

    # parametric
    usc_samples: int = 16
    inclusion_radii: tuple = (1e2, 1e3)
    inclusion_tol: float = 1e-2

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULTS = Defaults()

# Slack schedule for asymptotic-cone realization checks.
realization_eta = _sqrt_eta

import math
from fractions import Fraction

import numpy as np
import pytest

from util import orthant_cone
from whopt.errors import KernelEmpty
from whopt.expr import Const, parse
from whopt.geometry import PolyhedralCone, asymptotic_cone
from whopt.kernel import (
    EMPTY,
    NONTRIVIAL,
    TRIVIAL,
    compute_kernel,
    kernel_polar_interior_contains,
)


def angle_to(ray, target) -> float:
    ray = np.asarray(ray, dtype=float)
    target = np.asarray(target, dtype=float)
    c = float(ray @ target / (np.linalg.norm(ray) * np.linalg.norm(target)))
    return math.acos(max(-1.0, min(1.0, c)))


class TestClassification:
    def test_root_term_positive_on_ray(self, ex1, ex1_cones):
        report = compute_kernel(ex1.asymptotic, ex1_cones, ex1.alpha)
        assert report.classification == TRIVIAL
        assert report.mu == pytest.approx(1.0, abs=1e-9)
        assert report.rays == ()

    def test_single_zero_ray_on_orthant(self, ex2_kernel):
        assert ex2_kernel.classification == NONTRIVIAL
        assert abs(ex2_kernel.mu) <= 1e-6
        assert len(ex2_kernel.rays) == 1
        assert angle_to(ex2_kernel.rays[0], (1.0, 0.0)) <= 1e-3

    def test_negative_direction_empties_the_kernel(self, escape):
        cones = asymptotic_cone(escape.feasible_set)
        report = compute_kernel(escape.asymptotic, cones, escape.alpha)
        assert report.classification == EMPTY
        assert report.mu == pytest.approx(-1.0, abs=1e-9)

    def test_product_form_zeroes_both_axes(self):
        report = compute_kernel(parse("x1*x2"), [orthant_cone(2)],
                                Fraction(2))
        assert report.classification == NONTRIVIAL
        gaps = sorted(min(angle_to(r, a) for r in report.rays)
                      for a in ((1.0, 0.0), (0.0, 1.0)))
        assert gaps[-1] <= 1e-3

    def test_identically_zero_part_covers_the_cone(self):
        report = compute_kernel(Const(0.0), [orthant_cone(2)], Fraction(1))
        assert report.classification == NONTRIVIAL
        assert report.mu == 0.0
        # flat arc spanned by extreme rays: both axes must be generators
        assert report.cone is not None
        assert report.cone.contains((1.0, 0.0)) and report.cone.contains((0.0, 1.0))

    def test_origin_cone_is_trivially_clear(self):
        report = compute_kernel(parse("x1^2"), [PolyhedralCone.origin(2)],
                                Fraction(2))
        assert report.classification == TRIVIAL
        assert report.mu == math.inf

    def test_quartic_positive_form(self, quartic, quartic_cones):
        report = compute_kernel(quartic.asymptotic, quartic_cones,
                                quartic.alpha)
        assert report.classification == TRIVIAL

    def test_refinement_finds_off_grid_zero(self):
        # zero ray of the rotated form sits between degree grid points
        h = parse("(x2 - 2*x1)^2")
        report = compute_kernel(h, [orthant_cone(2)], Fraction(2),
                                resolution=360)
        assert report.classification == NONTRIVIAL
        v = np.array([1.0, 2.0]) / math.sqrt(5.0)
        assert min(angle_to(r, v) for r in report.rays) <= 1e-6


class TestPolarMargin:
    def test_strictly_interior_shift(self, ex2_kernel):
        margin, certified = kernel_polar_interior_contains(ex2_kernel,
                                                           (-1.0, 0.0))
        assert certified
        assert margin == pytest.approx(1.0, abs=1e-6)

    def test_boundary_shift_not_certified(self, ex2_kernel):
        margin, certified = kernel_polar_interior_contains(ex2_kernel,
                                                           (0.0, -1.0))
        assert not certified
        assert abs(margin) <= 1e-6

    def test_exterior_shift_negative_margin(self, ex2_kernel):
        margin, certified = kernel_polar_interior_contains(ex2_kernel,
                                                           (1.0, 0.0))
        assert not certified
        assert margin == pytest.approx(-1.0, abs=1e-6)

    def test_trivial_kernel_admits_any_shift(self, ex1, ex1_cones):
        report = compute_kernel(ex1.asymptotic, ex1_cones, ex1.alpha)
        margin, certified = kernel_polar_interior_contains(report, (5.0, 5.0))
        assert certified and margin == math.inf

    def test_empty_kernel_rejected(self, escape):
        cones = asymptotic_cone(escape.feasible_set)
        report = compute_kernel(escape.asymptotic, cones, escape.alpha)
        with pytest.raises(KernelEmpty):
            kernel_polar_interior_contains(report, (-1.0, -1.0))


class TestReportShape:
    def test_dict_round_trip_fields(self, ex2_kernel):
        d = ex2_kernel.to_dict()
        assert d["classification"] == NONTRIVIAL
        assert d["alpha"] == "5/2"
        assert len(d["rays"]) == len(d["ray_values"]) == 1

    def test_under_approximation_note_present(self, ex2_kernel):
        assert any("under-approximates" in n for n in ex2_kernel.notes)

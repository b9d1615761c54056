import math

import numpy as np
import pytest

from util import orthant_cone
from whopt.errors import DimensionTooLarge, Undeclared
from whopt.expr import parse
from whopt.geometry import (
    Piece,
    PolyhedralCone,
    SetDescription,
    ambient_box,
    asymptotic_cone,
    contains,
    contains_many,
    interior_margin,
    is_cone_set,
    is_pointed,
    polar_cone,
    realize_direction,
    sphere_rays,
    union_contains,
    validate_asymptotic_cone,
)


def cross_contained(a: PolyhedralCone, b: PolyhedralCone, tol=1e-8) -> bool:
    """Equality of cones via generator membership both ways."""
    return (all(b.contains(g, tol) for g in a.require_generators())
            and all(a.contains(g, tol) for g in b.require_generators()))


class TestPolar:
    def test_polar_of_orthant_is_negative_orthant(self):
        polar = polar_cone(orthant_cone(2))
        expected = PolyhedralCone.from_generators([[-1, 0], [0, -1]])
        assert cross_contained(polar, expected)

    def test_polar_of_single_ray_is_halfplane(self):
        polar = polar_cone(PolyhedralCone.from_generators([[1.0, 0.0]]))
        for u in [(-1, 0), (0, 1), (0, -1), (-3, 5)]:
            assert polar.contains(u)
        assert not polar.contains((1.0, 0.1))

    def test_polar_of_origin_is_full_space(self):
        polar = polar_cone(PolyhedralCone.origin(2))
        assert polar.contains((7.0, -3.0))

    def test_involution_on_random_cones(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            dim = int(rng.integers(2, 4))
            gens = rng.normal(size=(int(rng.integers(1, 4)), dim))
            gens = gens[np.linalg.norm(gens, axis=1) > 1e-6]
            if len(gens) == 0:
                continue
            cone = PolyhedralCone.from_generators(gens)
            assert cross_contained(polar_cone(polar_cone(cone)), cone)

    def test_involution_on_orthants(self):
        for dim in (1, 2, 3):
            cone = orthant_cone(dim)
            assert cross_contained(polar_cone(polar_cone(cone)), cone)

    def test_pointedness(self):
        assert is_pointed(orthant_cone(2))
        assert is_pointed(PolyhedralCone.from_generators([[1.0, 0.0]]))
        line = PolyhedralCone.from_generators([[0, 1], [0, -1], [-1, 0]])
        assert not is_pointed(line)
        assert not is_pointed(PolyhedralCone.full_space(2))


class TestRays:
    def test_quarter_arc_resolution(self):
        rays = sphere_rays([orthant_cone(2)], resolution=90)
        assert len(rays) == 91
        norms = np.linalg.norm(rays.rays, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-12)
        assert np.all(rays.rays >= -1e-12)

    def test_generators_always_included(self):
        cone = PolyhedralCone.from_generators([[2.0, 1.0]])
        rays = sphere_rays([cone], resolution=5)
        v = np.array([2.0, 1.0]) / math.sqrt(5.0)
        assert np.min(np.linalg.norm(rays.rays - v, axis=1)) <= 1e-12

    def test_origin_cone_yields_no_rays(self):
        assert len(sphere_rays([PolyhedralCone.origin(2)])) == 0

    def test_interior_margin_of_single_ray(self):
        ray = [PolyhedralCone.from_generators([[1.0, 0.0]])]
        assert interior_margin(ray, (-1.0, 5.0)) == 1.0
        assert interior_margin(ray, (2.0, 0.0)) == -2.0

    def test_interior_margin_of_origin_cone_is_infinite(self):
        assert interior_margin([PolyhedralCone.origin(2)], (1.0, 1.0)) == math.inf

    def test_interior_margin_of_orthant(self):
        margin = interior_margin([orthant_cone(2)], (-1.0, -1.0),
                                 resolution=360)
        # worst ray is a coordinate axis: margin exactly 1
        assert margin == pytest.approx(1.0, abs=1e-9)


class TestSets:
    def test_membership(self, ex1):
        s = ex1.feasible_set
        assert contains(s, (2.0, 2.0))     # inside the disk piece
        assert contains(s, (5.0, 0.0))     # on the ray piece
        assert not contains(s, (0.5, 0.5))
        mask = contains_many(s, np.array([[2.0, 2.0], [5.0, 0.0], [0.5, 0.5]]))
        assert mask.tolist() == [True, True, False]

    def test_ambient_box_respects_ambient_cone(self, ex1):
        lows, highs = ambient_box(ex1.feasible_set, 10.0)
        assert np.all(lows >= 0.0)
        assert np.all(highs <= 10.0 + 1e-12)

    def test_asymptotic_cone_of_disk_plus_ray(self, ex1):
        comps = asymptotic_cone(ex1.feasible_set)
        # the bounded disk contributes the origin, absorbed by the ray
        assert len(comps) == 1
        gens = comps[0].require_generators()
        assert len(gens) == 1
        assert np.linalg.norm(gens[0] - [1.0, 0.0]) <= 1e-9

    def test_asymptotic_cone_of_purely_linear_set(self, quartic):
        comps = asymptotic_cone(quartic.feasible_set)
        assert len(comps) == 1
        assert comps[0].contains((1.0, 0.0)) and comps[0].contains((0.0, 1.0))
        assert not comps[0].contains((-1.0, 0.0))

    def test_asymptotic_cone_of_bounded_set_is_origin(self):
        disk = Piece(smooth=(parse("(x1-2)^2 + (x2-2)^2 - 1"),))
        s = SetDescription(2, PolyhedralCone.full_space(2), (disk,))
        comps = asymptotic_cone(s)
        assert len(comps) == 1
        assert comps[0].is_origin

    def test_declared_cone_short_circuits(self, ex2):
        comps = asymptotic_cone(ex2.feasible_set)
        assert union_contains(comps, (1.0, 0.0))
        assert union_contains(comps, (0.0, 1.0))

    def test_unbounded_smooth_piece_requires_declaration(self):
        hyper = Piece(smooth=(parse("2 - x1*x2"),))
        s = SetDescription(2, orthant_cone(2), (hyper,))
        with pytest.raises(Undeclared):
            asymptotic_cone(s)

    def test_validate_accepts_correct_declaration(self, ex2):
        verdict = validate_asymptotic_cone(ex2.feasible_set,
                                           [orthant_cone(2)])
        assert verdict.passed

    def test_validate_rejects_too_large_declaration(self, ex1):
        # claiming the whole orthant for the disk-plus-ray set fails the
        # realization side along (0, 1)
        verdict = validate_asymptotic_cone(ex1.feasible_set,
                                           [orthant_cone(2)])
        assert not verdict.passed
        kinds = {o["kind"] for o in verdict.offenders}
        assert "realization" in kinds

    def test_validate_rejects_too_small_declaration(self, ex2):
        ray = [PolyhedralCone.from_generators([[1.0, 0.0]])]
        verdict = validate_asymptotic_cone(ex2.feasible_set, ray)
        assert not verdict.passed

    def test_realize_direction_finds_far_feasible_points(self, ex2):
        hit = realize_direction(ex2.feasible_set, (1.0, 0.0), 1000.0)
        assert hit is not None
        x, dist = hit
        assert dist <= 5.0 / math.sqrt(1000.0)
        assert contains(ex2.feasible_set, x)

    def test_is_cone_set(self, quartic, ex2):
        assert is_cone_set(quartic.feasible_set)
        assert not is_cone_set(ex2.feasible_set)


class TestGuards:
    def test_polar_generators_unavailable_above_three_dims(self):
        cone = PolyhedralCone.from_halfspace(np.eye(4))
        with pytest.raises(DimensionTooLarge):
            polar_cone(cone).require_generators()

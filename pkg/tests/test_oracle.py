import numpy as np
import pytest

from util import orthant_set
from whopt.errors import NoFeasiblePoint, OracleFailure
from whopt.expr import parse
from whopt.oracle import grid_minimize, refine


class TestGridMinimize:
    def test_disk_plus_ray_minimum_on_the_ray(self, ex1):
        res = grid_minimize(ex1.objective, ex1.feasible_set,
                            (0.0, 0.0), (10.0, 10.0), 201)
        assert res.x.tolist() == [1.0, 0.0]
        assert res.value == 1.0

    def test_reference_problem_scan_then_zoom(self, ex2):
        coarse = grid_minimize(ex2.objective, ex2.feasible_set,
                               (0.0, 16.0), (50.0, 50.0), 341)
        assert np.linalg.norm(coarse.x - [16.0, 16.0]) <= 0.2
        fine = refine(ex2.objective, ex2.feasible_set, coarse.x,
                      spacing=coarse.spacing)
        assert np.linalg.norm(fine.x - [16.0, 16.0]) <= 1e-3
        assert fine.value == pytest.approx(896.0, abs=1e-3)
        assert fine.value <= coarse.value

    def test_shifted_objective(self, ex2):
        res = grid_minimize(ex2.objective, ex2.feasible_set,
                            (0.0, 16.0), (50.0, 50.0), 341,
                            u=np.array([-1.0, 0.0]))
        # shifting by u = (-1, 0) adds +x1, pushing the mimimum left
        assert res.x[0] < 16.0

    def test_quadratic_bowl(self):
        s = orthant_set(2)
        res = grid_minimize(parse("(x1-2)^2 + (x2-3)^2"), s,
                            (0.0, 0.0), (8.0, 8.0), 33)
        assert res.x.tolist() == [2.0, 3.0]
        assert res.value == 0.0

    def test_ties_break_lexicographically(self):
        s = orthant_set(2)
        res = grid_minimize(parse("(x1-2)^2 * 0"), s, (0.0, 0.0),
                            (4.0, 4.0), 5)
        assert res.x.tolist() == [0.0, 0.0]

    def test_counts_points(self):
        s = orthant_set(2)
        res = grid_minimize(parse("x1 + x2"), s, (0.0, 0.0), (1.0, 1.0), 11)
        assert res.points_scanned == 121


class TestRefine:
    def test_spacing_shrinks_by_factor_each_round(self, ex2):
        res = refine(ex2.objective, ex2.feasible_set,
                     np.array([16.0, 16.0]), spacing=1.0, rounds=3,
                     factor=10.0)
        assert res.spacing == pytest.approx(1e-3)

    def test_value_never_increases(self, ex2):
        start = np.array([17.0, 17.0])
        start_value = float(17.0**2.5 + 0.5 * 289.0 - 289.0)
        res = refine(ex2.objective, ex2.feasible_set, start, spacing=2.0)
        assert res.value <= start_value

    def test_infeasible_start_rejected(self, ex2):
        with pytest.raises(NoFeasiblePoint):
            refine(ex2.objective, ex2.feasible_set, np.array([0.0, 0.0]),
                   spacing=1.0)


class TestGuards:
    def test_infeasible_box_rejected(self, ex2):
        with pytest.raises(NoFeasiblePoint):
            grid_minimize(ex2.objective, ex2.feasible_set,
                          (0.0, 0.0), (1.0, 1.0), 11)

    def test_budget_guard(self):
        s = orthant_set(2)
        with pytest.raises(OracleFailure):
            grid_minimize(parse("x1"), s, (0.0, 0.0), (1.0, 1.0), 10_000)

    def test_dimension_guard(self):
        s = orthant_set(4, convex=True)
        with pytest.raises(OracleFailure):
            grid_minimize(parse("x1"), s, [0.0] * 4, [1.0] * 4, 5)

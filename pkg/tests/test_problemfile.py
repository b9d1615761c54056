import copy
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import EXAMPLES
from whopt.errors import BadInput
from whopt.expr import evaluate
from whopt.problemfile import document_to_spec, load_problem, parse_document


@pytest.fixture()
def ex2_doc():
    return json.loads((EXAMPLES / "ex2.json").read_text())


def build(doc):
    return document_to_spec(parse_document(doc, "test"), "t", "test")


class TestLoading:
    def test_all_shipped_problems_load(self):
        for path in sorted(EXAMPLES.glob("*.json")):
            p = load_problem(path)
            assert p.label == path.stem
            assert p.n == 2
            assert p.feasible_start.shape == (2,)

    def test_reference_problem_fields(self, ex2):
        assert ex2.alpha == Fraction(5, 2)
        assert ex2.feasible_set.convex
        assert evaluate(ex2.objective, [16.0, 16.0]) == 896.0
        assert evaluate(ex2.asymptotic, [0.0, 1.0]) == 1.0
        assert ex2.feasible_set.declared_asymptotic is not None

    def test_integer_alpha_accepted(self, quartic):
        assert quartic.alpha == Fraction(4)

    def test_alternates_parsed(self, ex1):
        assert len(ex1.alternates) == 1
        assert evaluate(ex1.alternates[0], [4.0, 9.0]) == 5.0

    def test_label_comes_from_the_file_stem(self):
        assert load_problem(EXAMPLES / "escape.json").label == "escape"


class TestRejections:
    def check(self, doc, pointer):
        with pytest.raises(BadInput) as err:
            build(doc)
        assert pointer in str(err.value)

    def test_missing_objective(self, ex2_doc):
        ex2_doc.pop("objective")
        self.check(ex2_doc, "/objective")

    def test_extra_keys_rejected(self, ex2_doc):
        ex2_doc["bogus"] = 1
        self.check(ex2_doc, "/bogus")

    def test_nonpositive_degree(self, ex2_doc):
        ex2_doc["alpha"] = 0
        self.check(ex2_doc, "/alpha")

    def test_unparseable_degree(self, ex2_doc):
        ex2_doc["alpha"] = "abc"
        self.check(ex2_doc, "/alpha")

    def test_malformed_expression_node(self, ex2_doc):
        ex2_doc["objective"] = {"op": "add",
                                "args": [{"var": 0}, {"wat": 1}]}
        self.check(ex2_doc, "/objective/args/1")

    def test_ragged_generator(self, ex2_doc):
        ex2_doc["ambient"]["generators"] = [[1, 0], [0, 1, 2]]
        self.check(ex2_doc, "/ambient/generators/1")

    def test_linear_bound_count(self, ex2_doc):
        ex2_doc["constraints"]["pieces"][0]["linear"]["b"] = [1, 2, 3]
        self.check(ex2_doc, "/constraints/pieces/0/linear/b")

    def test_infeasible_start(self, ex2_doc):
        ex2_doc["feasible_start"] = [0, 0]
        self.check(ex2_doc, "/feasible_start")

    def test_start_width(self, ex2_doc):
        ex2_doc["feasible_start"] = [1]
        self.check(ex2_doc, "/feasible_start")

    def test_dimension_must_be_positive(self, ex2_doc):
        ex2_doc["n"] = 0
        self.check(ex2_doc, "/n")

    def test_at_least_one_piece(self, ex2_doc):
        ex2_doc["constraints"]["pieces"] = []
        self.check(ex2_doc, "/constraints/pieces")


class TestFileErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(BadInput):
            load_problem(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(BadInput):
            load_problem(bad)

    def test_non_object_document(self, tmp_path):
        bad = tmp_path / "arr.json"
        bad.write_text("[1, 2, 3]")
        with pytest.raises(BadInput):
            load_problem(bad)

    def test_round_trip_through_disk(self, tmp_path, ex2_doc):
        doc = copy.deepcopy(ex2_doc)
        doc["seed"] = 7
        path = tmp_path / "copy.json"
        path.write_text(json.dumps(doc))
        p = load_problem(path)
        assert p.label == "copy"
        assert p.seed == 7
        assert np.array_equal(p.feasible_start, [16.0, 16.0])

import json
import warnings

import pytest

from conftest import EXAMPLES
from whopt.runner import finalize_report

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from whopt.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def payload(name, **extra):
    doc = json.loads((EXAMPLES / f"{name}.json").read_text())
    return {"problem": doc, "label": name, **extra}


class TestHealth:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["version"]


class TestValidate:
    def test_passing_document(self, client):
        r = client.post("/validate", json=payload("ex1"))
        assert r.status_code == 200
        report = r.json()["report"]
        assert report["report_version"] == 1
        assert report["command"] == "validate"
        assert report["status"] == "ok"
        assert report["problem"] == "ex1"
        assert all(v["passed"] for v in report["verdicts"])

    def test_failing_declaration_reports_not_crash(self, client):
        doc = json.loads((EXAMPLES / "ex1.json").read_text())
        # wrongly claim the whole orthant escapes to infinity
        doc["asymptotic_cone"] = {"cones": [
            {"generators": [[1, 0], [0, 1]]}]}
        r = client.post("/validate", json={"problem": doc, "label": "bad"})
        assert r.status_code == 200
        report = r.json()["report"]
        assert report["status"] == "validation_failure"
        assert any(not v["passed"] for v in report["verdicts"])


class TestKernel:
    def test_reference_kernel(self, client):
        r = client.post("/kernel", json=payload("ex2"))
        assert r.status_code == 200
        kernel = r.json()["report"]["kernel"]
        assert kernel["classification"] == "Nontrivial"
        assert abs(kernel["mu"]) <= 1e-6

    def test_what_if_overrides(self, client):
        r = client.post("/kernel", json=payload(
            "ex1", alpha_override="2", h="x1*x2"))
        assert r.status_code == 200
        kernel = r.json()["report"]["kernel"]
        assert kernel["classification"] == "Nontrivial"
        assert kernel["alpha"] == "2"

    def test_bad_override_expression(self, client):
        r = client.post("/kernel", json=payload("ex1", h="x1 + * x2"))
        assert r.status_code == 422


class TestCertify:
    def test_trivial_kernel_headline(self, client):
        r = client.post("/certify", json=payload("ex1"))
        assert r.status_code == 200
        report = r.json()["report"]
        assert report["headline"]["kind"] == "TrivialKernel"
        assert report["status"] == "ok"

    def test_condition_a_headline(self, client):
        r = client.post("/certify", json=payload("ex2"))
        assert r.status_code == 200
        report = r.json()["report"]
        assert report["headline"]["kind"] == "PseudoconvexConditionA"


class TestSolve:
    def test_shifted_solve(self, client):
        r = client.post("/solve", json=payload("ex2", u=[-1.0, 0.0]))
        assert r.status_code == 200
        report = r.json()["report"]
        assert report["u"] == [-1.0, 0.0]
        outcome = report["solve"]
        assert outcome["status"] == "Converged"
        assert abs(outcome["x"][0] - 15.0) <= 1e-3
        assert abs(outcome["x"][1] - 16.0) <= 1e-3
        assert report["minty"]["passed"] is True

    def test_escape_reported_as_completed_run(self, client):
        r = client.post("/solve", json=payload("escape"))
        assert r.status_code == 200
        outcome = r.json()["report"]["solve"]
        assert outcome["status"] == "Escaping"
        assert abs(outcome["asymptotic_value"] + 1.0) <= 1e-3

    def test_wrong_shift_width(self, client):
        r = client.post("/solve", json=payload("ex2", u=[1.0, 2.0, 3.0]))
        assert r.status_code == 422


class TestParametric:
    def test_small_grid(self, client):
        r = client.post("/parametric",
                        json=payload("ex2", grid="-1,1;0"))
        assert r.status_code == 200
        report = r.json()["report"]
        assert len(report["sweep"]) == 2
        assert report["summary"]["converged"] == 2

    def test_degree_guard_maps_to_conflict(self, client):
        r = client.post("/parametric", json=payload("ex1", grid="0;0"))
        assert r.status_code == 409
        detail = r.json()["detail"]
        assert detail["type"] == "DegreeTooSmall"

    def test_malformed_grid(self, client):
        r = client.post("/parametric", json=payload("ex2", grid="oops"))
        assert r.status_code == 422


class TestProbeUsc:
    def test_quartic_ball(self, client):
        r = client.post("/probe-usc", json=payload(
            "quartic", center=[4.0, 4.0], radius=0.5, samples=4))
        assert r.status_code == 200
        probe = r.json()["report"]["probe"]
        assert not probe["unbounded"]
        assert probe["sup_norm"] <= 1.5

    def test_center_width_checked(self, client):
        r = client.post("/probe-usc", json=payload(
            "quartic", center=[4.0], radius=0.5))
        assert r.status_code == 422


class TestContracts:
    def test_schema_violations_are_422(self, client):
        doc = json.loads((EXAMPLES / "ex1.json").read_text())
        doc.pop("objective")
        r = client.post("/validate", json={"problem": doc})
        assert r.status_code == 422

    def test_unknown_override_rejected(self, client):
        r = client.post("/validate", json=payload(
            "ex1", overrides={"not_a_knob": 1}))
        assert r.status_code == 422
        assert "/overrides/not_a_knob" in str(r.json()["detail"])

    def test_extra_request_field_rejected(self, client):
        r = client.post("/validate", json=payload("ex1", surprise=True))
        assert r.status_code == 422

    def test_seed_echoed(self, client):
        r = client.post("/kernel", json=payload("ex2", seed=7))
        assert r.json()["report"]["seed"] == 7

    def test_override_echoed_in_config(self, client):
        r = client.post("/kernel", json=payload(
            "ex2", overrides={"kernel_resolution": 180}))
        report = r.json()["report"]
        assert report["config"]["kernel_resolution"] == 180
        assert report["kernel"]["resolution"] == 180

    def test_reports_byte_stable_across_calls(self, client):
        a = client.post("/certify", json=payload("ex2")).json()["report"]
        b = client.post("/certify", json=payload("ex2")).json()["report"]
        assert finalize_report(a) == finalize_report(b)

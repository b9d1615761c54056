"""HTTP service exposing the analysis pipeline.

Each endpoint accepts a self-contained problem document (the same JSON
schema as the problem files) plus command arguments, and returns the
same report envelope the CLI writes.  Mapping of failures:

- malformed documents, expressions, or arguments -> 422;
- precondition/validation errors raised by the pipeline (degree too
  small, undeclared asymptotic cone, inconclusive search, infeasible
  truncations) -> 409 with the error type in the detail;
- completed runs, including NotCertified outcomes and reports with
  status=validation_failure -> 200.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .errors import BadInput, ParseError, WhoptError
from .problemfile import ProblemDocument, document_to_spec
from .runner import (
    apply_overrides,
    report_certify,
    report_kernel,
    report_parametric,
    report_probe_usc,
    report_solve,
    report_validate,
)

app = FastAPI(
    title="whopt",
    version=__version__,
    description="Existence analysis for weakly homogeneous optimization "
                "problems: asymptotic cones, kernels, certificates, "
                "expanding-truncation solves, and parametric sweeps.",
)


class ProblemRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    problem: ProblemDocument
    label: str = "problem"
    seed: int | None = None
    overrides: dict[str, Any] | None = None


class SolveRequest(ProblemRequest):
    u: list[float] | None = None


class KernelRequest(ProblemRequest):
    alpha_override: str | int | float | None = None
    h: str | None = None


class ParametricRequest(ProblemRequest):
    grid: str


class ProbeUscRequest(ProblemRequest):
    center: list[float]
    radius: float = Field(gt=0)
    samples: int = Field(default=16, ge=1)


class ReportResponse(BaseModel):
    report: dict


class HealthResponse(BaseModel):
    status: str
    version: str


def _spec_of(req: ProblemRequest):
    try:
        spec = document_to_spec(req.problem, label=req.label)
        config = apply_overrides(req.overrides)
    except (BadInput, ParseError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    if req.seed is not None:
        spec.seed = req.seed
    return spec, config


def _run(fn, *args, **kwargs) -> ReportResponse:
    try:
        return ReportResponse(report=fn(*args, **kwargs))
    except (BadInput, ParseError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except WhoptError as exc:
        raise HTTPException(
            status_code=409,
            detail={"type": type(exc).__name__, "message": str(exc)},
        ) from exc


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/validate", response_model=ReportResponse)
def validate(req: ProblemRequest) -> ReportResponse:
    spec, config = _spec_of(req)
    return _run(report_validate, spec, config)


@app.post("/kernel", response_model=ReportResponse)
def kernel(req: KernelRequest) -> ReportResponse:
    spec, config = _spec_of(req)
    return _run(report_kernel, spec, config,
                alpha_override=req.alpha_override, h_override=req.h)


@app.post("/certify", response_model=ReportResponse)
def certify(req: ProblemRequest) -> ReportResponse:
    spec, config = _spec_of(req)
    return _run(report_certify, spec, config)


@app.post("/solve", response_model=ReportResponse)
def solve(req: SolveRequest) -> ReportResponse:
    spec, config = _spec_of(req)
    if req.u is not None and len(req.u) != spec.n:
        raise HTTPException(status_code=422,
                            detail=f"u has {len(req.u)} coordinates, "
                                   f"expected {spec.n}")
    return _run(report_solve, spec, config, u=req.u)


@app.post("/parametric", response_model=ReportResponse)
def parametric(req: ParametricRequest) -> ReportResponse:
    spec, config = _spec_of(req)
    return _run(report_parametric, spec, req.grid, config)


@app.post("/probe-usc", response_model=ReportResponse)
def probe_usc(req: ProbeUscRequest) -> ReportResponse:
    spec, config = _spec_of(req)
    if len(req.center) != spec.n:
        raise HTTPException(status_code=422,
                            detail=f"center has {len(req.center)} "
                                   f"coordinates, expected {spec.n}")
    return _run(report_probe_usc, spec, req.center, req.radius,
                samples=req.samples, config=config)

"""Problem-file schema and loading.

A problem is one self-contained JSON document:

    {
      "n": 2,
      "alpha": "5/2",                  // rational string or number
      "objective": <expression tree>,
      "asymptotic": <expression tree>, // optional homogeneous term
      "alternates": [<tree>, ...],     // optional alternative terms
      "ambient": {"generators": [[1,0],[0,1]]},
      "constraints": {"pieces": [
          {"linear": {"A": [[0,-1]], "b": [-16]},
           "smooth": [<tree>, ...]}    // union of pieces, each
      ]},                              //   linear rows Ax <= b plus
      "asymptotic_cone": {"cones": [{"generators": [[1,0]]}]},  // optional
      "convex": true,
      "feasible_start": [16, 16],
      "seed": 0
    }

Schema violations surface as BadInput carrying a JSON-pointer path to
the offending field.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .analysis import ProblemSpec
from .errors import BadInput, ParseError
from .expr import from_tree
from .geometry import Piece, PolyhedralCone, SetDescription, contains


class ConeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    generators: list[list[float]]


class ConesModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    cones: list[ConeModel] = Field(min_length=1)


class LinearModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    A: list[list[float]]
    b: list[float]


class PieceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    linear: LinearModel | None = None
    smooth: list[Any] = Field(default_factory=list)


class ConstraintsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pieces: list[PieceModel] = Field(min_length=1)


class ProblemDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n: int = Field(ge=1)
    alpha: str | int | float
    objective: Any
    asymptotic: Any | None = None
    alternates: list[Any] = Field(default_factory=list)
    ambient: ConeModel
    constraints: ConstraintsModel
    asymptotic_cone: ConesModel | None = None
    convex: bool = False
    feasible_start: list[float]
    seed: int = 0


def _pointer(loc) -> str:
    return "/" + "/".join(str(part) for part in loc)


def parse_document(data: dict, source: str = "<memory>") -> ProblemDocument:
    try:
        return ProblemDocument.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise BadInput(f"{first['msg']} at {_pointer(first['loc'])}",
                       path=source) from exc


def _alpha_fraction(raw, source: str) -> Fraction:
    try:
        if isinstance(raw, str):
            value = Fraction(raw)
        else:
            value = Fraction(raw).limit_denominator(10**9)
    except (ValueError, ZeroDivisionError) as exc:
        raise BadInput(f"invalid homogeneity degree {raw!r} at /alpha",
                       path=source) from exc
    if value <= 0:
        raise BadInput(f"homogeneity degree must be positive, got {value} "
                       f"at /alpha", path=source)
    return value


def _expr_at(tree, pointer: str, source: str):
    try:
        return from_tree(tree, pointer)
    except ParseError as exc:
        raise BadInput(str(exc), path=source) from exc


def document_to_spec(doc: ProblemDocument, label: str,
                     source: str = "<memory>") -> ProblemSpec:
    n = doc.n
    alpha = _alpha_fraction(doc.alpha, source)
    objective = _expr_at(doc.objective, "/objective", source)
    asymptotic = None
    if doc.asymptotic is not None:
        asymptotic = _expr_at(doc.asymptotic, "/asymptotic", source)
    alternates = tuple(
        _expr_at(t, f"/alternates/{i}", source)
        for i, t in enumerate(doc.alternates))

    for row_idx, row in enumerate(doc.ambient.generators):
        if len(row) != n:
            raise BadInput(f"generator has {len(row)} coordinates, "
                           f"expected {n} at /ambient/generators/{row_idx}",
                           path=source)
    ambient = PolyhedralCone.from_generators(doc.ambient.generators, dim=n)

    pieces = []
    for i, pm in enumerate(doc.constraints.pieces):
        if pm.linear is not None:
            A = np.asarray(pm.linear.A, dtype=float).reshape(-1, n) \
                if pm.linear.A else np.zeros((0, n))
            if pm.linear.A and any(len(r) != n for r in pm.linear.A):
                raise BadInput(f"linear row width != {n} at "
                               f"/constraints/pieces/{i}/linear/A",
                               path=source)
            b = np.asarray(pm.linear.b, dtype=float)
            if len(b) != len(A):
                raise BadInput(f"{len(A)} linear rows but {len(b)} bounds at "
                               f"/constraints/pieces/{i}/linear/b",
                               path=source)
        else:
            A, b = np.zeros((0, n)), np.zeros(0)
        smooth = tuple(
            _expr_at(t, f"/constraints/pieces/{i}/smooth/{j}", source)
            for j, t in enumerate(pm.smooth))
        pieces.append(Piece(linear_A=A, linear_b=b, smooth=smooth))

    declared = None
    if doc.asymptotic_cone is not None:
        declared = tuple(
            PolyhedralCone.from_generators(c.generators, dim=n)
            for c in doc.asymptotic_cone.cones)

    feasible_set = SetDescription(
        dim=n, ambient=ambient, pieces=tuple(pieces),
        declared_asymptotic=declared, convex=doc.convex)

    start = np.asarray(doc.feasible_start, dtype=float)
    if len(start) != n:
        raise BadInput(f"feasible_start has {len(start)} coordinates, "
                       f"expected {n} at /feasible_start", path=source)
    if not contains(feasible_set, start, 1e-9):
        raise BadInput("feasible_start violates the constraints "
                       "at /feasible_start", path=source)

    try:
        return ProblemSpec(
            n=n, alpha=alpha, objective=objective,
            feasible_set=feasible_set, asymptotic=asymptotic,
            alternates=alternates, feasible_start=start,
            seed=doc.seed, label=label)
    except ValueError as exc:
        raise BadInput(str(exc), path=source) from exc


def load_problem(path) -> ProblemSpec:
    """Read, validate, and convert a problem file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BadInput(f"cannot read problem file: {exc}",
                       path=str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadInput(f"not valid JSON: {exc}", path=str(path)) from exc
    if not isinstance(data, dict):
        raise BadInput("problem file must hold a JSON object",
                       path=str(path))
    doc = parse_document(data, source=str(path))
    return document_to_spec(doc, label=path.stem, source=str(path))

"""Exception types shared across the package."""

from __future__ import annotations


class WhoptError(Exception):
    """Base class for all package errors."""


class DomainError(WhoptError):
    """Expression evaluated outside its real domain."""


class ParseError(WhoptError):
    """Malformed expression text or tree."""

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{message} (at {where})" if where else message)


class BadInput(WhoptError):
    """Problem document violates the input schema."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class Undeclared(WhoptError):
    """A constraint piece is unbounded and carries no declared cone."""


class OracleFailure(WhoptError):
    """A numeric probe could not produce the samples it needs."""


class DimensionTooLarge(WhoptError):
    """Generator reconstruction is only available for dimension <= 3."""


class EmptyRaySet(WhoptError):
    """An operation needs unit rays but the cone is the origin."""


class KernelEmpty(WhoptError):
    """Polar-interior query against an empty kernel."""


class NoFeasibleSeed(WhoptError):
    """No feasible starting point inside the current truncation."""


class NoFeasiblePoint(WhoptError):
    """Exhaustive scan found no feasible grid point."""


class SearchInconclusive(WhoptError):
    """Witness search neither certified nor refuted within its budget."""


class ConePrecondition(WhoptError):
    """Operation requires the feasible set to be a cone."""


class DegreeTooSmall(WhoptError):
    """Parametric analysis requires homogeneity degree > 1."""

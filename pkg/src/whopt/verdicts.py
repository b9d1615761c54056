"""Structured results for numeric checks.

A verdict never proves anything by itself; it records what was sampled,
the worst offender seen, and the threshold the statistic was held to.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ValidationVerdict:
    check: str
    passed: bool
    statistic: float          # worst offending magnitude observed
    threshold: float
    offenders: tuple = ()     # up to a few worst sample records (dicts)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "passed": bool(self.passed),
            "statistic": _round_float(self.statistic),
            "threshold": self.threshold,
            "offenders": [_round_rec(o) for o in self.offenders],
            "params": _round_rec(self.params),
        }


def _round_float(v):
    # Stabilize report bytes: cut float noise below any tolerance in use.
    if isinstance(v, float):
        if v != v or v in (float("inf"), float("-inf")):
            return repr(v)
        return float(f"{v:.12g}")
    return v


def _round_rec(obj):
    if isinstance(obj, dict):
        return {k: _round_rec(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_round_rec(v) for v in obj]
    return _round_float(obj)

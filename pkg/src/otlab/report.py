"""Bound evaluation records shared by the analysis modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional


def _num(x) -> float:
    return float(x) if x is not None else float("nan")


@dataclass
class BoundParams:
    """Scalar inputs of the quantitative estimates.

    ell is the half-distance |x - y| / 2 of the probed segment.  C is the
    calibration slot for the universal constant of whichever inequality the
    report evaluates; the harness never shares one slot between different
    inequalities.
    """

    ell: float | Fraction = 0
    delta: float | Fraction = 0
    h1: float | Fraction = 0
    h2: float | Fraction = 0
    lam1: float | Fraction = 1
    lam2: float | Fraction = 1
    K: float | Fraction = 0
    eps: float | Fraction = 0
    gamma: float | Fraction = 0
    D: float | Fraction = 0
    L_inf: float | Fraction = 0
    C: float | Fraction = 1

    def replace(self, **kw) -> "BoundParams":
        from dataclasses import replace

        return replace(self, **kw)

    def as_floats(self) -> dict:
        return {k: _num(getattr(self, k)) for k in
                ("ell", "delta", "h1", "h2", "lam1", "lam2", "K", "eps",
                 "gamma", "D", "L_inf", "C")}


HOLDS = "holds"
FAILS = "fails"
NOT_APPLICABLE = "not-applicable"


@dataclass
class BoundReport:
    """One evaluated inequality: both sides, parameters, verdict."""

    inequality: str
    lhs: float
    rhs: float
    params: Optional[BoundParams] = None
    verdict: str = HOLDS
    preconditions: dict = field(default_factory=dict)
    witness: object = None

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    @staticmethod
    def from_sides(inequality, lhs, rhs, params=None, preconds=None,
                   witness=None) -> "BoundReport":
        pre = dict(preconds or {})
        if not all(pre.values()):
            verdict = NOT_APPLICABLE
        else:
            verdict = HOLDS if lhs <= rhs else FAILS
        return BoundReport(inequality, _num(lhs), _num(rhs), params, verdict,
                           pre, witness)

    def to_json_dict(self) -> dict:
        doc = {
            "inequality": self.inequality,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "verdict": self.verdict,
            "preconditions": dict(sorted(self.preconditions.items())),
        }
        if self.params is not None:
            doc["params"] = self.params.as_floats()
        if self.witness is not None:
            doc["witness"] = repr(self.witness)
        return doc

    def csv_row(self, scenario: str) -> list:
        p = self.params.as_floats() if self.params else {}
        return [
            scenario, self.inequality, repr(self.lhs), repr(self.rhs),
            self.verdict,
            *(repr(p.get(k, float("nan"))) for k in
              ("ell", "delta", "gamma", "K", "eps", "h1", "h2", "lam1",
               "lam2", "C")),
        ]


CSV_HEADER = ["scenario", "inequality", "lhs", "rhs", "verdict", "l", "delta",
              "gamma", "K", "eps", "h1", "h2", "lam1", "lam2", "C"]

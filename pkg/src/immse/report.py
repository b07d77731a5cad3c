"""Lightweight check/report containers shared by verification ops and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    """One lhs-vs-rhs comparison with its tolerance."""
    name: str
    lhs: float
    rhs: float
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class Report:
    """A named bundle of checks with optional free-text notes."""
    name: str
    checks: list = field(default_factory=list)
    notes: str = ""

    def add(self, name: str, lhs: float, rhs: float, tolerance: float) -> Check:
        check = Check(name, float(lhs), float(rhs), float(tolerance))
        self.checks.append(check)
        return check

    @property
    def max_deviation(self) -> float:
        return max((c.deviation for c in self.checks), default=0.0)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "checks": [c.to_dict() for c in self.checks],
            "notes": self.notes,
            "pass": self.passed,
        }

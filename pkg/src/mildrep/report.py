"""Pass/fail records shared by the checking functions."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class Check:
    """Outcome of a single numerical check.

    ``residual`` is the signed violation: the measured quantity minus the
    tolerance it is compared against, so ``residual <= 0`` means satisfied.
    """

    name: str
    passed: bool
    residual: float
    tolerance: float
    details: str = ""

    @classmethod
    def from_metric(cls, name: str, metric: float, tolerance: float, details: str = "") -> "Check":
        residual = float(metric) - float(tolerance)
        return cls(name, bool(residual <= 0.0), residual, float(tolerance), details)

    @classmethod
    def skipped(cls, name: str, reason: str) -> "Check":
        return cls(name, True, 0.0, 0.0, f"skipped: {reason}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.checks]

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks], "overall": self.overall}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        return cls([Check(**c) for c in data["checks"]])

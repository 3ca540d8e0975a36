"""Verification reports: one worst-margin entry per checked inequality."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass
class Check:
    """``lhs <= rhs + tol`` checked over samples; ``margin`` is min(rhs - lhs)."""

    name: str
    margin: float
    tol: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "worst_margin": _num(self.margin), "tol": self.tol, **self.detail}


@dataclass
class VerificationReport:
    name: str
    checks: list[Check] = field(default_factory=list)
    samples: int = 0
    seed: int | None = None
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, margin: float, tol: float, **detail) -> Check:
        c = Check(name, float(margin), tol, detail)
        self.checks.append(c)
        return c

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "report": self.name,
            "passed": self.passed,
            "samples": self.samples,
            "seed": self.seed,
            "checks": [c.to_dict() for c in self.checks],
            "info": {k: _num(v) for k, v in self.info.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"  {c.name:<28} {'ok ' if c.passed else 'BAD'} margin={c.margin:.3e}")
        return "\n".join(lines)


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v

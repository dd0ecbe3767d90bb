"""Pass/fail outcome shared by every checker."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)

    def __bool__(self):
        return self.passed

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "verdict": "pass" if self.passed else "fail",
            "detail": self.detail,
            "witnesses": self.witnesses,
        }

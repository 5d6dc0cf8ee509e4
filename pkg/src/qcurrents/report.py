"""Structured outcome of one identity check."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Any

MAX_WITNESSES = 25


@dataclass
class Failure:
    location: str
    lhs: str
    rhs: str

    def to_dict(self):
        return {"location": self.location, "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class RelationReport:
    """``status`` is ``pass``, ``fail`` or ``vacuous``.

    ``values`` maps assertion locations to the raw left-hand scalars; it is
    only filled when cross-backend comparison is requested and is never
    serialized.
    """

    check_id: str
    params: dict = dc_field(default_factory=dict)
    status: str = "pass"
    assertions: int = 0
    failures: list = dc_field(default_factory=list)
    failure_count: int = 0
    truncated: bool = False
    notes: dict = dc_field(default_factory=dict)
    values: dict | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def record(self, location: str, ok: bool, lhs: Any = "", rhs: Any = "") -> bool:
        self.assertions += 1
        if not ok:
            self.failure_count += 1
            self.status = "fail"
            if len(self.failures) < MAX_WITNESSES:
                self.failures.append(Failure(location, str(lhs), str(rhs)))
        return ok

    def compare(self, fld, location: str, lhs, rhs) -> bool:
        """Scalar equality in ``fld``; keeps ``lhs`` for cross-backend checks."""
        if self.values is not None:
            self.values[location] = (lhs, rhs)
        ok = fld.equal(lhs, rhs)
        if ok:
            self.assertions += 1
            return True
        return self.record(location, False, fld.fmt(lhs), fld.fmt(rhs))

    def fail(self, location: str, lhs: Any = "", rhs: Any = "") -> None:
        self.record(location, False, lhs, rhs)

    def absorb(self, other: "RelationReport", prefix: str = "") -> None:
        """Merge a sub-check into this one."""
        self.assertions += other.assertions
        self.failure_count += other.failure_count
        self.truncated = self.truncated or other.truncated
        for f in other.failures:
            if len(self.failures) < MAX_WITNESSES:
                self.failures.append(Failure(prefix + f.location, f.lhs, f.rhs))
        if other.status == "fail":
            self.status = "fail"
        if self.values is not None and other.values is not None:
            for k, v in other.values.items():
                self.values[prefix + k] = v

    def finish(self) -> "RelationReport":
        if self.status == "pass" and self.assertions == 0:
            self.status = "vacuous"
        return self

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "params": _jsonable(self.params),
            "status": self.status,
            "assertions": self.assertions,
            "failure_count": self.failure_count,
            "failures": [f.to_dict() for f in self.failures],
            "truncated": self.truncated,
            "notes": _jsonable(self.notes),
        }

    def summary_line(self) -> str:
        tag = self.status.upper()
        extra = " (truncated certification)" if self.truncated else ""
        return f"[{tag}] {self.check_id}: {self.assertions} assertions, {self.failure_count} failures{extra}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    if hasattr(x, "to_str"):
        return x.to_str()
    return str(x)

"""Check verdicts and their structured serialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .core import Run
from .encoding import encode, to_json

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"
STATUSES = (PASS, FAIL, INCONCLUSIVE)


@dataclass
class CheckResult:
    check: str
    status: str
    bound: dict = field(default_factory=dict)
    witness: Any = None
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "status": self.status,
            "bound": jsonify(self.bound),
            "witness": jsonify(self.witness),
            "details": jsonify(self.details),
        }

    def to_json(self) -> str:
        return to_json(self.to_dict())


def jsonify(obj: Any) -> Any:
    """Best-effort structural conversion of verdict payloads to JSON values."""
    if isinstance(obj, CheckResult):
        return obj.to_dict()
    if isinstance(obj, Run):
        return {
            "start": encode(obj.start),
            "steps": [
                {"dst": encode(st.dst), "fault": st.fault, "label": jsonify(st.label)} for st in obj.steps
            ],
        }
    if isinstance(obj, dict):
        return {str(k) if isinstance(k, str) else to_json(jsonify(k)): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [jsonify(v) for v in obj]
    try:
        return encode(obj)
    except TypeError:
        return repr(obj)


def passed(check: str, bound: dict, **details: Any) -> CheckResult:
    return CheckResult(check, PASS, bound, None, details)


def failed(check: str, bound: dict, witness: Any, **details: Any) -> CheckResult:
    return CheckResult(check, FAIL, bound, witness, details)


def inconclusive(check: str, bound: dict, reason: str, **details: Any) -> CheckResult:
    return CheckResult(check, INCONCLUSIVE, bound, None, {"reason": reason, **details})

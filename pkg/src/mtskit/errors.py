"""Exception hierarchy shared by every module."""

from __future__ import annotations

from typing import Any


class MtsError(Exception):
    """Base class for errors raised by mtskit."""


class StructuralError(MtsError):
    """Malformed input: non-contiguous run, unknown agent, bad parameters."""


class BudgetExceeded(MtsError):
    """A bounded exploration hit the state-count ceiling."""

    def __init__(self, message: str, count: int) -> None:
        super().__init__(message)
        self.count = count


class MappingUndefined(MtsError):
    """A partial implementation map has no value at the given state."""

    def __init__(self, state: Any, reason: str = "") -> None:
        msg = f"mapping undefined at {state!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.state = state
        self.reason = reason


class Refusal(MtsError):
    """A checker declined to run because a premise fails; carries a witness."""

    def __init__(self, message: str, witness: Any = None) -> None:
        super().__init__(message)
        self.witness = witness

"""Exception hierarchy shared by every module."""

from __future__ import annotations


class AimsError(Exception):
    """Base class for all domain errors."""


class DecimalPrecisionError(AimsError, ValueError):
    """A decimal literal needs more fractional digits than the fixed scale allows."""


class TimeBeforeStart(AimsError, ValueError):
    def __init__(self, at: int, start: int):
        super().__init__(f"timestamp {at} precedes price function start {start}")
        self.at = at
        self.start = start


class NonMonotoneTimestamp(AimsError, ValueError):
    def __init__(self, at: int, last: int):
        super().__init__(f"timestamp {at} precedes last event timestamp {last}")
        self.at = at
        self.last = last


class NegativeDeposit(AimsError, ValueError):
    pass


class InsufficientBalance(AimsError, ValueError):
    pass


class MalformedLog(AimsError, ValueError):
    """Structural defect in an event log; ``seq`` is the first offending entry."""

    def __init__(self, seq: int, reason: str):
        super().__init__(f"malformed log at seq {seq}: {reason}")
        self.seq = seq
        self.reason = reason


class SchemaError(AimsError, ValueError):
    """Invalid document; ``pointer`` is a JSON pointer to the offending node."""

    def __init__(self, pointer: str, reason: str):
        super().__init__(f"{pointer or '/'}: {reason}")
        self.pointer = pointer
        self.reason = reason


class InvariantViolation(AimsError):
    """A module invariant failed; ``invariant`` names it."""

    def __init__(self, invariant: str, detail: str = "", seq: int | None = None):
        msg = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(msg)
        self.invariant = invariant
        self.detail = detail
        self.seq = seq


class ActionFailed(AimsError):
    """A scenario action was rejected by the ledger."""

    def __init__(self, index: int, cause: AimsError):
        super().__init__(f"action {index}: {cause}")
        self.index = index
        self.cause = cause

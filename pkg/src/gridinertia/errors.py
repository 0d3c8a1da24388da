"""Exception types shared across the package."""

from __future__ import annotations


class GridInertiaError(Exception):
    """Base class for all package-specific errors."""


class WindowTooSparse(GridInertiaError):
    """A window selected fewer samples than the operation requires."""


class NonFinite(GridInertiaError):
    """A selected frequency value is NaN or infinite."""


class MissingVoltage(GridInertiaError):
    """The stream carries no voltage channel but one is required."""


class RocofBelowFloor(GridInertiaError):
    """|true event RoCoF| is below the configured stability floor."""


class InsufficientData(GridInertiaError):
    """The stream does not cover a required fit window densely enough."""


class NonPositiveTruth(GridInertiaError):
    """Reference inertia must be positive to form an error rate."""


class InvalidScenario(GridInertiaError):
    """A simulation scenario failed validation; message names the field."""


class RestrictionViolated(GridInertiaError):
    """A scenario does not satisfy the analytic-oracle restrictions."""


class InsufficientRecords(GridInertiaError):
    """Too few ledger records for the requested statistic."""


class ParseError(GridInertiaError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonMonotonicTime(ParseError):
    """Timestamps in a stream file are not strictly increasing."""

    def __init__(self, line: int, reason: str = "timestamp not strictly increasing"):
        super().__init__(line, reason)

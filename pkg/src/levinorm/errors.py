"""Exception types shared across the package.

The distinction between the two precision errors matters for callers: a
PrecisionExhausted is raised by the exact/certified arithmetic layer when a
floor, ceiling, or orbit point cannot be pinned down within the working
precision budget, while InsufficientPrecision is raised by analyzers when the
available approximation of the constructed number is too shallow for the
requested measurement (the fix is to run the construction deeper).
"""


class LevinormError(Exception):
    """Base class for all package-specific failures."""


class PrecisionExhausted(LevinormError):
    """A certified floor/ceiling/orbit value could not be separated within the
    working precision budget."""


class InsufficientPrecision(LevinormError):
    """The held approximation of the constructed number is too shallow for the
    requested count or report; carries the suggested deeper target when known."""

    def __init__(self, message, required_r_max=None):
        super().__init__(message)
        self.required_r_max = required_r_max


class CapExhausted(LevinormError):
    """No qualifying candidate was found below the search cap (existence below
    q_r is guaranteed, existence below the cap is not)."""


class BudgetExceeded(LevinormError):
    """A brute-force helper was asked to enumerate beyond its configured budget."""


class ScheduleError(LevinormError):
    """Malformed or unsupported schedule document or rule."""


class UnrecognizedRule(ScheduleError):
    """The growth classifier only speaks about recognized n_r rule shapes."""


class CheckpointError(LevinormError):
    """Malformed, truncated, or inconsistent checkpoint file."""


class CheckpointVersionMismatch(CheckpointError):
    """Checkpoint format_version is not supported by this build."""

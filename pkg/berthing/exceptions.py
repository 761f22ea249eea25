"""
Error hierarchy for the berthing package.

Every concrete error also derives from ``ValueError`` so callers that only
care about bad values can catch the builtin.
"""


class BerthingError(Exception):
    """Base class for all berthing errors."""


class NonFiniteError(BerthingError, ValueError):
    """A state, action, gradient or loss contained NaN or infinity.

    Raised inside training loops this is the abort signal for the run.
    """


class DimensionError(BerthingError, ValueError):
    """Array shapes do not match what a network or buffer expects."""


class ArchitectureMismatchError(BerthingError, ValueError):
    """Two networks that must share an architecture do not."""


class EmptyBufferError(BerthingError, ValueError):
    """Sampling was requested from a replay buffer holding no items."""


class UnknownCaseError(BerthingError, ValueError):
    """The requested initial berthing case does not exist."""


class MissingRunsError(BerthingError, ValueError):
    """A comparison referenced runs whose artifacts are absent."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"Missing run artifacts: {', '.join(str(m) for m in self.missing)}")

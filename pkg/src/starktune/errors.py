"""Exception types shared across the package."""

from __future__ import annotations


class OutOfRangeError(ValueError):
    """A requested target lies outside the physically achievable interval.

    Carries the achievable closed interval so callers can report what the
    device could have reached instead.
    """

    def __init__(self, message: str, achievable: tuple[float, float]):
        super().__init__(message)
        self.achievable = (float(achievable[0]), float(achievable[1]))


class DegenerateInputError(ValueError):
    """Input data cannot determine the requested quantity (rank deficiency)."""


class NonPhysicalStateError(ValueError):
    """A density matrix violates hermiticity, unit trace, or positivity."""


class EmptyEnsembleError(ValueError):
    """An ensemble operation that needs at least one record got none."""

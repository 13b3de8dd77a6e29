"""Exception types raised across the package."""


class PanelModelError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(PanelModelError):
    """Array shapes disagree; ``axis`` names the offending axis."""

    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


class DataValidationError(PanelModelError):
    """Input data violates a documented contract (bad values, unbalanced panel, ...)."""


class NumericalDomainError(PanelModelError):
    """A likelihood quantity became non-finite; carries the offending cell."""

    def __init__(self, message, unit=None, period=None):
        super().__init__(message)
        self.unit = unit
        self.period = period


class RankDeficiencyError(PanelModelError):
    """A factor matrix lost column rank; ``column`` names the deficient column."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class SingularityError(PanelModelError):
    """A matrix that must be inverted is numerically singular."""


class EstimationError(PanelModelError):
    """An estimation run (or a required sub-fit) failed."""

"""Domain exceptions raised by the library."""


class RisShaperError(Exception):
    """Base class for all library errors."""


class InvalidConfigError(RisShaperError):
    """A scenario parameter is missing, unknown, or out of its valid range."""


class DegenerateGeometryError(RisShaperError):
    """Coincident or otherwise unusable node positions."""


class CoverageViolationError(RisShaperError):
    """The receiver sits outside the region the panel sizing guarantees."""


class InfeasibleStreamCountError(RisShaperError):
    """Not enough usable panels (or channel modes) for the requested streams."""


class SearchBudgetError(RisShaperError):
    """Exhaustive subset search would exceed the configured budget."""


class InvalidInputError(RisShaperError):
    """Numerically unusable input (non-finite entries, empty spectrum, ...)."""


class InvalidDesignError(RisShaperError):
    """A reflection design violates a precondition of the requested operation."""

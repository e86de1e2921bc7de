"""Exception types shared across the package."""


class CimeterError(Exception):
    """Base class for all cimeter errors."""


class InputError(CimeterError, ValueError):
    """Caller supplied inconsistent or malformed input (CLI exit code 2)."""


class NumericalIntegrityError(CimeterError, ArithmeticError):
    """A computation produced a value that violates a mathematical
    guarantee beyond rounding tolerance (CLI exit code 3)."""


class EmptyNeighborhoodError(NumericalIntegrityError):
    """All smoothing weights underflowed for a query point: no sample
    carries measurable mass in its neighborhood."""

class NumericalError(ArithmeticError):
    """Base class for numerical failures (CLI exit code 3)."""


class PrecisionExhausted(NumericalError):
    """An alternating series could not be stabilised at the maximal working precision."""


class NegativeProbabilityError(NumericalError):
    """A probability fell below the clamp floor, which roundoff alone cannot explain."""


class SeriesTruncationError(NumericalError):
    """An infinite series did not meet its tail bound within the allowed number of terms."""


class EnumerationLimitError(ValueError):
    """A partition enumeration was requested above the configured cap."""

"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when input data violates a contract (bad corpus, zero rows, ...)."""


class NumericalError(RuntimeError):
    """Raised when a numerical routine fails (non-finite factors, no convergence)."""

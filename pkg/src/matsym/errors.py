"""Exception types shared across the library."""


class MatsymError(Exception):
    """Base class for all library-specific errors."""


class DomainError(MatsymError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(MatsymError, ValueError):
    """Input data violates a dataset or schema invariant."""


class TrainingError(MatsymError, RuntimeError):
    """Numerical failure (divergence, non-finite loss) during training."""

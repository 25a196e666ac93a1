"""Exception hierarchy shared by the library and the CLI."""


class SpecShrinkError(Exception):
    """Base class for all errors raised by specshrink."""


class ValidationError(SpecShrinkError, ValueError):
    """Malformed input data (non-finite entries, shape mismatch, non-Hermitian)."""


class IngestionError(ValidationError):
    """An input file could not be parsed or has the wrong length."""


class ConfigurationError(SpecShrinkError, ValueError):
    """Invalid estimator configuration, e.g. an even smoothing span."""


class DomainError(SpecShrinkError, ValueError):
    """An argument lies outside its admissible range."""


class DegenerateRegressorError(SpecShrinkError, ArithmeticError):
    """The market series is identically zero, so slopes are undefined."""


class DegenerateGapError(SpecShrinkError, ArithmeticError):
    """Target and averaged periodogram coincide; fall back to zero intensity."""


class NumericalConsistencyError(SpecShrinkError, ArithmeticError):
    """A quantity that must be nonnegative came out clearly negative."""


class InsufficientSampleError(SpecShrinkError, ValueError):
    """Too few Monte Carlo replicates for a variance estimate."""

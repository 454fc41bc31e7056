"""Exception hierarchy shared by all spectracal modules."""


class SpectracalError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SpectracalError, ValueError):
    """Shapes or wavelength grids of two operands do not match."""


class DomainError(SpectracalError, ValueError):
    """A value lies outside the mathematical domain of an operation."""


class FormatError(SpectracalError, ValueError):
    """A file does not conform to its declared binary or text format."""


class ParameterError(SpectracalError, ValueError):
    """An argument or option is invalid."""


class ConfigError(ParameterError):
    """A run configuration is inconsistent or contains unknown keys."""


class SamplingError(SpectracalError, RuntimeError):
    """Rejection sampling exhausted its retry budget."""


class ConvergenceError(SpectracalError, RuntimeError):
    """An iterative solver failed to converge.

    ``best_rmse`` carries the smallest residual seen before giving up, so
    callers can decide whether the partial result is still usable.
    """

    def __init__(self, message: str, best_rmse: float | None = None):
        super().__init__(message)
        self.best_rmse = best_rmse

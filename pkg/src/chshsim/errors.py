"""Exception types shared across the package."""


class ChshSimError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(ChshSimError, ValueError):
    """A parameter is outside its documented domain."""


class EmptyRunError(ChshSimError, ValueError):
    """A run was requested with zero trials."""


class InsufficientDataError(ChshSimError, ValueError):
    """Too few trials to form the requested statistic."""


class CalibrationError(ChshSimError, RuntimeError):
    """Calibration did not reach the requested tolerance.

    Carries the best latent correlation found and the sign correlation it
    achieved, so callers can decide whether the near-miss is usable.
    """

    def __init__(self, message, best_rho, achieved):
        super().__init__(message)
        self.best_rho = best_rho
        self.achieved = achieved

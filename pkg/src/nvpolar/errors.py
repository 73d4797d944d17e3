"""Exception hierarchy shared by every nvpolar module."""


class NVPolarError(Exception):
    """Base class for all errors raised by nvpolar."""


class InvalidInputError(NVPolarError, ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(NVPolarError):
    """Settings that cannot be executed (e.g. a step size that underflows)."""


class CalibrationError(NVPolarError):
    """Pulse calibration found no solution within its search range."""


class InferenceError(NVPolarError):
    """A spectral component needed for polarization inference is absent."""


class DetectionError(NVPolarError):
    """No qualifying feature (e.g. a local minimum) was found in a trace."""

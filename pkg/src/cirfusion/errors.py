"""Exception types raised across the package."""


class CirFusionError(Exception):
    """Base class for all package errors."""


class ReferenceNotFoundError(CirFusionError, ValueError):
    """No calibration reference peak could be located in a snapshot."""


class CalibrationError(CirFusionError, ValueError):
    """A snapshot cannot be calibrated (shift too large, zero reference energy)."""


class DegenerateWindowError(CirFusionError, ArithmeticError):
    """The snapshot window carries no usable signal energy."""


class ScenarioError(CirFusionError, ValueError):
    """Invalid scenario or sweep configuration.

    ``line`` is the 1-based line in the source file, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RecordingFormatError(CirFusionError, ValueError):
    """A recording file could not be parsed."""

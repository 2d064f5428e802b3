"""Exception types shared across the package.

Split along the CLI's exit-code boundary: configuration and input problems
(exit 2) versus numerical failures discovered mid-computation (exit 3).
"""


class ConfigError(ValueError):
    """Invalid configuration, option, or input file content."""


class ConstellationFormatError(ConfigError):
    """Constellation file violates the text format; names the offending line."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyCatalogSlotError(ConfigError):
    """A catalog slot exists but its coordinate file is not bundled."""


class NumericalError(RuntimeError):
    """A computation failed to converge or produced unusable numbers."""


class IntegrationError(NumericalError):
    """Kernel integration did not reach the required accuracy."""

    def __init__(self, message, relative_error=None):
        super().__init__(message)
        self.relative_error = relative_error


class BracketError(NumericalError):
    """A bracketed 1D search could not locate an interior optimum."""


class CalibrationError(NumericalError):
    """Simulation-based coefficient fitting is ill-posed."""

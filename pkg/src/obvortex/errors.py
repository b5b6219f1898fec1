"""Exception types raised by the simulation engine."""


class ObvortexError(Exception):
    """Base class for all errors raised by this package."""


class SingularPointError(ObvortexError, ValueError):
    """A kernel was evaluated at one of its poles."""


class UnsupportedDimensionError(ObvortexError, ValueError):
    pass


class BoundaryEvaluationError(ObvortexError, ValueError):
    """A half-space kernel was evaluated at a target on the wall."""


class CFLError(ObvortexError, RuntimeError):
    pass


class PositivityError(ObvortexError, RuntimeError):
    """Density dropped to a non-positive value."""


class SingularMultiplierError(ObvortexError, RuntimeError):
    pass


class NonFiniteError(ObvortexError, FloatingPointError):
    """A non-finite value appeared; ``term`` names where it came from."""

    def __init__(self, message, term=None):
        super().__init__(message)
        self.term = term


class GridError(ObvortexError, ValueError):
    pass


class ConfigError(ObvortexError, ValueError):
    """Invalid configuration; carries the offending key and line if known."""

    def __init__(self, message, key=None, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line


class StepError(ObvortexError, RuntimeError):
    """Wraps an error raised inside a time step with the step context."""

    def __init__(self, message, step, time, cause=None):
        super().__init__(f"step {step} (t={time:g}): {message}")
        self.step = step
        self.time = time
        self.cause = cause


class MissingSnapshotError(ObvortexError, FileNotFoundError):
    pass

"""Exception types shared across the package."""


class ArrowLabError(Exception):
    """Base class for all errors raised by arrowlab."""


class DomainError(ArrowLabError):
    """An input lies outside the domain an operation is defined on."""


class FixedPointOverflowError(ArrowLabError):
    """A fixed-point result would leave the 64-bit raw range."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (at step {step})"
        super().__init__(message)
        self.step = step


class EngineError(ArrowLabError):
    """The simulation engine reached an invalid state."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (at step {step})"
        super().__init__(message)
        self.step = step


class ConfigError(ArrowLabError):
    """A scenario configuration is malformed or inconsistent."""

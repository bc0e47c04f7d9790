"""Exception types shared across the package."""


class FedzgeError(Exception):
    """Base class for all package errors."""


class ShapeError(FedzgeError, ValueError):
    """An array argument has the wrong shape or an inconsistent size."""


class NonFiniteError(FedzgeError, ArithmeticError):
    """A public operation produced NaN or Inf."""


class CapabilityError(FedzgeError, PermissionError):
    """A white-box capability was requested from a black-box client."""


class ConfigError(FedzgeError, ValueError):
    """An experiment configuration is malformed; the message names the key."""


class UnsupportedMethodError(FedzgeError, ValueError):
    """The requested protocol cannot run under the given setup."""


class DataFormatError(FedzgeError, ValueError):
    """A dataset file is malformed; the message names the line."""

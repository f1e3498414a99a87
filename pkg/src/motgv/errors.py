"""Exception hierarchy shared by all modules."""

__all__ = [
    "MotgvError",
    "InputError",
    "DimensionError",
    "NumericError",
    "UnsupportedFamilyError",
    "ConfigError",
    "FormatError",
    "ParseError",
    "ResourceError",
]


class MotgvError(Exception):
    """Base class for every error raised by the package."""


class InputError(MotgvError, ValueError):
    """Invalid argument: negative magnitude, out-of-range cell, bad shape."""


class DimensionError(InputError):
    """Two grid objects that must share dimensions do not."""


class NumericError(MotgvError, ArithmeticError):
    """An iterative numeric routine failed to converge or produced NaN."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class UnsupportedFamilyError(MotgvError, NotImplementedError):
    """The requested operation has no implementation for this Phi family."""


class ConfigError(MotgvError, ValueError):
    """Solver or run configuration violates an invariant."""


class FormatError(MotgvError, ValueError):
    """A file has the wrong magic number or an unsupported layout."""


class ParseError(FormatError):
    """A file is malformed; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class ResourceError(MotgvError, RuntimeError):
    """The request would exceed a fixed resource limit."""

"""Exception hierarchy shared by all modules."""


class AdaptiveCSError(Exception):
    """Base class for every error raised by this package."""


class ContractError(AdaptiveCSError, ValueError):
    """An argument violates a documented precondition (shape, range, index)."""


class ConfigError(AdaptiveCSError, ValueError):
    """A configuration value is invalid or inconsistent."""


class DegenerateConfigError(ConfigError):
    """The configuration would select no patch at an adaptive stage."""


class PgmFormatError(AdaptiveCSError, ValueError):
    """Malformed PGM header."""


class PgmUnsupportedError(PgmFormatError):
    """Well-formed PGM that uses a feature we do not support (e.g. maxval != 255)."""


class PgmTruncatedError(AdaptiveCSError, OSError):
    """Payload shorter than the header promises."""


class NumericError(AdaptiveCSError, ArithmeticError):
    """Non-finite values appeared during an iterative solve."""

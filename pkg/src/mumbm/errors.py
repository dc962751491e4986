"""Exception types raised across the package."""


class MbmError(Exception):
    """Base class for all package errors."""


class ConfigError(MbmError, ValueError):
    """Invalid scheme, alphabet or experiment configuration."""


class EncodingError(MbmError, ValueError):
    """Bit payload does not match the expected label length."""


class BudgetError(MbmError, RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""

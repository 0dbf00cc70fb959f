"""Exception types shared across the package.

The CLI maps ``VrsickError`` (and subclasses) to exit code 1 — these are
input/configuration problems the operator can fix. Anything else escaping
a command is a runtime failure and exits 2.
"""


class VrsickError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(VrsickError):
    """A binary container is malformed. Messages name the byte offset."""


class DataError(VrsickError):
    """A manifest or dataset failed validation or could not be loaded."""


class ConfigError(VrsickError):
    """An invalid configuration value or combination."""


class ContractError(VrsickError):
    """A caller violated an operation's precondition (usually shapes)."""


class StratificationError(DataError):
    """A class has too few samples to be split across the requested folds."""

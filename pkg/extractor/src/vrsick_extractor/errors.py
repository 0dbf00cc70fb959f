"""Exception types shared across the extractor.

The CLI maps ``ExtractorError`` (and subclasses) to exit code 1 — these
are input/configuration problems the operator can fix. Anything else
escaping a command is a runtime failure and exits 2.
"""


class ExtractorError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ExtractorError):
    """An invalid configuration value or combination."""


class ExtractionError(ExtractorError):
    """A video cannot be decoded or sampled, or its labels are invalid."""


class AlignmentError(ExtractionError):
    """A label's minute owns no sampled frames (it lies beyond the clip)."""


class ExtractionWarning(UserWarning):
    """Non-fatal: the extraction succeeded but produces no training samples."""

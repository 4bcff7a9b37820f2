"""Shared exception types."""


class UdkitError(Exception):
    """Base class for all data and configuration errors raised by udkit."""


class ConlluError(UdkitError):
    """Malformed CoNLL-U input. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RuleError(UdkitError):
    """Malformed morphological rule file. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(UdkitError):
    """Invalid pipeline configuration."""

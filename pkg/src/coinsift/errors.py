"""Exception taxonomy shared by all pipeline stages.

ParseError / ValidationError map to CLI exit code 1 (bad input data),
ConfigError to exit code 2 (bad parameters).
"""


class CoinsiftError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CoinsiftError):
    """A line of an input file could not be parsed."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class ValidationError(CoinsiftError):
    """Input parsed but violates a semantic constraint."""


class ConfigError(CoinsiftError):
    """Invalid or infeasible configuration."""

"""Exception hierarchy for the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError (and
subclasses) -> 2, anything else that escapes -> 3.
"""


class TridiffError(Exception):
    """Base class for all package errors."""


class ConfigError(TridiffError):
    """Invalid configuration or usage: bad parameter values, bad CLI flags."""


class DataError(TridiffError):
    """The input data cannot be processed as requested."""


class ParseError(DataError):
    """A malformed line in an interaction file; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ContractError(TridiffError):
    """A caller violated an operation's contract (wrong shapes, negative input...)."""


class UnscorableUserError(DataError):
    """The target user has an empty training profile and cannot be scored."""

"""Exception taxonomy shared by the library and the CLI exit-code mapping."""


class MoealignError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MoealignError):
    """Invalid configuration or usage (CLI exit code 2)."""


class DataError(MoealignError):
    """Structurally valid request over invalid data (CLI exit code 1)."""


class ContractViolation(MoealignError):
    """An API precondition or internal invariant was broken (CLI exit code 1)."""


class ParseError(DataError):
    """Malformed input text; carries a location when one is known."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        if line is not None:
            message = f"{message} (line {line})"
        elif offset is not None:
            message = f"{message} (char {offset})"
        super().__init__(message)

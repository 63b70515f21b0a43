"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class DsmError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DsmError):
    """Invalid configuration: bad option values, unknown keys, unsupported modes."""


class DataError(DsmError):
    """Invalid or inconsistent input data (domain violations, CRS mismatches)."""


class ParseError(DataError):
    """Malformed textual input; carries the offending position."""

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        self.offset = offset
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class NumericalError(DsmError):
    """Numerical failure: singular systems, non-convergence."""

"""Shared exception types and process exit codes."""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class ConfigError(Exception):
    """Invalid run configuration: bad keys, bad values, missing input files."""


class DataError(ValueError):
    """Malformed or internally inconsistent input data."""


class InvariantError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""

"""Exception hierarchy shared across the package.

Each top-level error family maps to a distinct CLI exit code.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class KsomtError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(KsomtError):
    """Invalid run configuration (flags, factorization rules, bad modes)."""

    exit_code = EXIT_CONFIG


class DataValidationError(KsomtError):
    """Input data violates a structural requirement."""

    exit_code = EXIT_DATA


class ParseError(DataValidationError):
    """Malformed input file (ragged rows, unreadable cells)."""


class NumericError(KsomtError):
    """Numeric degeneracy (e.g. all eigenvalues below threshold)."""

    exit_code = EXIT_NUMERIC

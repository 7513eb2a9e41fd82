"""Exception hierarchy shared by the library and the command-line tool."""


class HTKMeansError(Exception):
    """Base class for all package errors."""


class DataError(HTKMeansError, ValueError):
    """Malformed, empty or degenerate input data."""


class ConfigError(HTKMeansError, ValueError):
    """Invalid parameters or run configuration."""


class EmptyClusterError(HTKMeansError):
    """A center update was requested for a partition with an empty cluster."""


class NumericalError(HTKMeansError, ArithmeticError):
    """A numerical routine produced an invalid result."""

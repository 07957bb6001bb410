"""Exception types shared across the package."""


class MarlabError(Exception):
    """Base class for all package errors."""


class DataError(MarlabError):
    """Bad input data: missing files, unparseable values, coverage gaps."""


class EstimationError(MarlabError):
    """Numerical failure: optimizer breakdown, rank deficiency, bad grids."""

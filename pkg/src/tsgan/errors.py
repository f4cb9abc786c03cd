"""Exception types shared across the package.

The CLI maps these onto its exit-code contract:
DataError -> 2, NumericError -> 3.
"""


class DataError(Exception):
    """Input data is missing, malformed, or unusable."""


class NumericError(Exception):
    """A computation produced a non-finite or otherwise invalid value."""

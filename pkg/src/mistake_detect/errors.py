"""Exception types shared across the toolkit."""


class DataError(Exception):
    """An input file, directory, or corpus violates the on-disk contract."""


class NumericalError(Exception):
    """A numeric routine produced a non-finite or otherwise unusable result."""

"""Exception types shared across the package."""


class CellvecError(Exception):
    """Base class for all cellvec errors."""


class FormatError(CellvecError):
    """A file or stream does not conform to its declared format."""


class TrainingDivergedError(CellvecError):
    """Embedding training produced non-finite weights."""

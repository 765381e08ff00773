"""Exception hierarchy.

Everything the CLI should report as a user/data problem (exit code 1)
derives from :class:`RadError`.
"""


class RadError(Exception):
    """Base class for user-facing errors."""


class DataError(RadError):
    """Malformed, missing or inconsistent input data."""


class DimensionError(RadError, ValueError):
    """Vector or matrix shape does not match the model or basis."""


class DegenerateMatrixError(RadError):
    """Low-rank matrix is numerically zero, so no subspace can be extracted."""


class SolverDivergedError(RadError):
    """An iterate of the PCP solver became non-finite."""


class ModelFormatError(RadError):
    """Model file is unreadable or has an unsupported format version."""

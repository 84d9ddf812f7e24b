"""Exception hierarchy shared across the package."""


class Motion2dError(Exception):
    """Base class for errors raised by this package."""


class DataError(Motion2dError):
    """Malformed, missing, or inconsistent input data."""


class CheckpointError(DataError):
    """Unreadable, tampered, or incompatible checkpoint/index container."""


class TrainingDiverged(Motion2dError):
    """Non-finite loss or gradient encountered during optimization."""

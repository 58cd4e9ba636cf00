"""Exception types shared across the package."""


class CalibError(Exception):
    """Base class for calibration-specific failures."""


class NoOverlapError(CalibError):
    """Raised when an extrinsic projects zero cloud points into every mask set."""


class CloudTooSmallError(CalibError):
    """Raised when a point cloud has too few points for the requested operation."""


class InvalidSpecError(CalibError):
    """Raised when a synthetic scene spec cannot produce a valid scene."""


class EmptyMaskSetError(CalibError):
    """Raised when zero masks survive loading."""


class DimensionMismatchError(CalibError):
    """Raised when masks in one set disagree about the image size."""

"""Exception types shared across the package."""


class CGLError(Exception):
    """Base class for all package errors."""


class DecodeError(CGLError):
    """An image file could not be read or has an unusable pixel format."""


class DimensionMismatch(CGLError):
    """Rasters that must share a shape do not."""


class ChannelError(CGLError):
    """A raster has the wrong number of channels for the operation."""


class LayoutError(CGLError):
    """A dataset directory is missing required subdirectories."""


class TooSmall(CGLError):
    """Image too small for the requested superpixel grid."""


class FormatError(CGLError):
    """A tensor file violates the binary format."""


class NonFinite(CGLError):
    """NaN or infinity encountered where finite values are required."""


class SingularSystem(CGLError):
    """A linear system that should be positive definite failed to solve."""


class DegenerateTrace(CGLError):
    """Graph smoothness traces are invalid (non-finite or negative)."""


class NoBoundary(CGLError):
    """No superpixel touches the requested image side."""


class EmptyGT(CGLError):
    """Ground-truth mask contains no positive pixels."""


class MissingGT(CGLError):
    """Evaluation requested an image that has no ground truth."""


class IdMismatch(CGLError):
    """Saliency maps and dataset ids do not line up."""

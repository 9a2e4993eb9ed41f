"""Extractor error types."""


class FeatxError(Exception):
    """Base class for extractor errors."""


class ModelLoadError(FeatxError):
    """Backbone weights could not be obtained."""


class InferenceError(FeatxError):
    """A single image failed to process."""


class FormatError(FeatxError):
    """A tensor file violates the binary format."""


class NonFinite(FeatxError):
    """NaN or infinity in tensor data."""


class LayoutError(FeatxError):
    """Dataset directory is missing RGB/ or T/."""

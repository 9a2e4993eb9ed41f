"""Offline convolutional feature exporter for RGB-thermal image pairs."""

from .extract import ExtractionJob, Manifest, extract
from .tensorio import read_tensor, selftest, tensor_bytes, write_tensor_atomic

__all__ = [
    "ExtractionJob",
    "Manifest",
    "extract",
    "read_tensor",
    "selftest",
    "tensor_bytes",
    "write_tensor_atomic",
]

__version__ = "0.1.0"

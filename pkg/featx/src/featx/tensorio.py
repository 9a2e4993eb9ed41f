"""Binary tensor file writer/reader.

Format, fixed across producers and consumers:

    bytes 0..7    magic ``CGLTENS1``
    bytes 8..19   height, width, channels as uint32 little-endian
    byte  20      dtype code (1 = float32)
    bytes 21..    row-major H*W*C float32 little-endian payload
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, NonFinite

MAGIC = b"CGLTENS1"
DTYPE_F32 = 1
_HEADER = struct.Struct("<8sIIIB")


def tensor_bytes(tensor: np.ndarray) -> bytes:
    """Serialize an (H, W, C) array to the wire format."""
    tensor = np.ascontiguousarray(tensor, dtype="<f4")
    if tensor.ndim != 3:
        raise FormatError(f"tensor must be (H, W, C), got {tensor.shape}")
    if not np.isfinite(tensor).all():
        raise NonFinite("tensor payload contains NaN or infinity")
    h, w, c = tensor.shape
    return _HEADER.pack(MAGIC, h, w, c, DTYPE_F32) + tensor.tobytes()


def write_tensor_atomic(path, tensor: np.ndarray) -> None:
    """Write via a temp file and rename, so readers never see partial data."""
    path = Path(path)
    payload = tensor_bytes(tensor)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def read_tensor(path) -> np.ndarray:
    """Read and validate a tensor file."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, h, w, c, dtype = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if dtype != DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if len(data) != _HEADER.size + 4 * h * w * c:
        raise FormatError(f"{path}: wrong payload length")
    tensor = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(h, w, c)
    if not np.isfinite(tensor).all():
        raise NonFinite(f"{path}: payload contains NaN or infinity")
    return tensor


def selftest(tmp_dir) -> None:
    """Round-trip and rejection checks for the format implementation."""
    rngless = np.arange(8, dtype=np.float32).reshape(2, 2, 2) / 7.0
    path = Path(tmp_dir) / "selftest.tens"
    write_tensor_atomic(path, rngless)
    back = read_tensor(path)
    if path.read_bytes() != tensor_bytes(back):
        raise FormatError("selftest: round trip is not byte-identical")
    if not np.array_equal(back, rngless):
        raise FormatError("selftest: values changed in round trip")

    corrupted = bytearray(path.read_bytes())
    corrupted[:8] = b"XXXXXXXX"
    bad = Path(tmp_dir) / "selftest_bad.tens"
    bad.write_bytes(bytes(corrupted))
    try:
        read_tensor(bad)
    except FormatError:
        pass
    else:
        raise FormatError("selftest: corrupted magic was accepted")

    try:
        tensor_bytes(np.full((1, 1, 1), np.nan, dtype=np.float32))
    except NonFinite:
        pass
    else:
        raise FormatError("selftest: NaN payload was accepted")

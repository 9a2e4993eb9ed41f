"""Per-superpixel feature vectors: native color means plus imported deep maps.

Deep feature maps arrive as binary tensor files produced offline; this
module validates, resizes, and pools them. The file format is fixed:

    bytes 0..7    magic ``CGLTENS1``
    bytes 8..19   height, width, channels as uint32 little-endian
    byte  20      dtype code (1 = float32)
    bytes 21..    row-major H*W*C float32 little-endian payload
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, FormatError, NonFinite
from .imgcore import ImagePair, rgb_to_lab
from .superpixel import SuperpixelMap

TENSOR_MAGIC = b"CGLTENS1"
TENSOR_DTYPE_F32 = 1
_HEADER = struct.Struct("<8sIIIB")

MODALITIES = ("rgb", "t")
DEEP_LAYERS = ("conv1", "conv5")


def write_tensor(path, tensor: np.ndarray) -> None:
    """Write an (H, W, C) float array as a tensor file."""
    tensor = np.ascontiguousarray(tensor, dtype="<f4")
    if tensor.ndim != 3:
        raise FormatError(f"tensor must be (H, W, C), got shape {tensor.shape}")
    if not np.isfinite(tensor).all():
        raise NonFinite("refusing to write non-finite tensor data")
    h, w, c = tensor.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TENSOR_MAGIC, h, w, c, TENSOR_DTYPE_F32))
        fh.write(tensor.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read and validate a tensor file, returning an (H, W, C) float32 array."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, h, w, c, dtype = _HEADER.unpack_from(data)
    if magic != TENSOR_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if dtype != TENSOR_DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    expected = _HEADER.size + 4 * h * w * c
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    tensor = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(h, w, c)
    if not np.isfinite(tensor).all():
        raise NonFinite(f"{path}: payload contains NaN or infinity")
    return tensor


def bilinear_resize(tensor: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (H, W, C) data bilinearly, align-corners-false convention."""
    h, w = tensor.shape[:2]
    if (h, w) == (out_h, out_w):
        return tensor
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = ys.astype(np.intp)
    x0 = xs.astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = tensor[y0][:, x0] * (1.0 - fx) + tensor[y0][:, x1] * fx
    bottom = tensor[y1][:, x0] * (1.0 - fx) + tensor[y1][:, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def superpixel_means(raster: np.ndarray, smap: SuperpixelMap) -> np.ndarray:
    """Mean of each channel over each superpixel; returns (n, C)."""
    if raster.shape[:2] != smap.labels.shape:
        raise DimensionMismatch(
            f"raster {raster.shape[:2]} does not match labels {smap.labels.shape}"
        )
    channels = raster[..., None] if raster.ndim == 2 else raster
    c = channels.shape[2]
    flat = smap.labels.ravel()
    order = np.argsort(flat, kind="stable")
    starts = np.zeros(smap.n, dtype=np.intp)
    starts[1:] = np.cumsum(smap.sizes)[:-1]
    sums = np.add.reduceat(
        channels.reshape(-1, c)[order].astype(np.float64), starts, axis=0
    )
    return sums / smap.sizes[:, None]


def color_features(channels: np.ndarray, smap: SuperpixelMap) -> np.ndarray:
    """Per-superpixel mean color vectors; values stay within [0, 1]."""
    return superpixel_means(channels, smap)


def ingest_deep(tensor_path, smap: SuperpixelMap, image_size: tuple[int, int]) -> np.ndarray:
    """Pool a deep feature file into per-superpixel vectors.

    The tensor is bilinearly resized to the image size when needed, averaged
    over each superpixel, then every channel is min-max normalized across
    superpixels (constant channels map to 0).
    """
    w, h = image_size
    tensor = read_tensor(tensor_path).astype(np.float64)
    tensor = bilinear_resize(tensor, h, w)
    vectors = superpixel_means(tensor, smap)
    lo = vectors.min(axis=0)
    span = vectors.max(axis=0) - lo
    return np.where(span > 0.0, (vectors - lo) / np.where(span > 0.0, span, 1.0), 0.0)


def deep_feature_path(directory, image_id: str, modality: str, layer: str) -> Path:
    """Conventional location of one exported feature map."""
    return Path(directory) / f"{image_id}.{modality}.{layer}.tens"


@dataclass(frozen=True)
class FeatureSet:
    """Feature vectors indexed by (modality index, feature index).

    ``vectors[(m, k)]`` is an (n, d) array; k = 0 is the handcrafted color
    feature, followed by the deep layers in ``DEEP_LAYERS`` order when deep
    features were requested.
    """

    n: int
    modalities: tuple[str, ...]
    K: int
    vectors: dict[tuple[int, int], np.ndarray]

    @property
    def M(self) -> int:
        return len(self.modalities)

    def dim(self, m: int, k: int) -> int:
        return self.vectors[(m, k)].shape[1]


def assemble(
    pair: ImagePair,
    smap: SuperpixelMap,
    deep_paths: dict[tuple[str, str], object] | None = None,
    modalities: tuple[str, ...] = MODALITIES,
) -> FeatureSet:
    """Build the feature set for one image pair.

    Color features alone give K = 1; passing ``deep_paths`` (one entry per
    (modality, layer) for every requested modality and both deep layers)
    gives K = 3. Missing entries raise before any vectors are returned.
    """
    size = (pair.width, pair.height)
    if deep_paths is not None:
        for name in modalities:
            for layer in DEEP_LAYERS:
                if (name, layer) not in deep_paths:
                    raise FormatError(f"missing deep feature path for ({name}, {layer})")
    lab = rgb_to_lab(pair.rgb)
    vectors: dict[tuple[int, int], np.ndarray] = {}
    for m, name in enumerate(modalities):
        base = lab if name == "rgb" else pair.thermal
        vectors[(m, 0)] = color_features(base, smap)
        if deep_paths is not None:
            for j, layer in enumerate(DEEP_LAYERS, start=1):
                vectors[(m, j)] = ingest_deep(deep_paths[(name, layer)], smap, size)
    k = 1 if deep_paths is None else 1 + len(DEEP_LAYERS)
    return FeatureSet(n=smap.n, modalities=tuple(modalities), K=k, vectors=vectors)

"""Image buffers, color-space conversion, and dataset pair loading.

Rasters are numpy float64 arrays with intensities in [0, 1]: ``(H, W, 3)``
for RGB data and ``(H, W)`` for single-channel data. 8-bit files are divided
by 255 on load.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ChannelError, DecodeError, DimensionMismatch, LayoutError

# sRGB -> XYZ under the D65 white point (IEC 61966-2-1).
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])

#: Rescaled value of the neutral (a = b = 0) chroma channels.
LAB_NEUTRAL = 128.0 / 255.0

_IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class ImagePair:
    """Aligned RGB and thermal rasters plus an optional binary ground truth."""

    rgb: np.ndarray
    thermal: np.ndarray
    gt: np.ndarray | None = None
    id: str = ""

    def __post_init__(self):
        shape = self.thermal.shape
        if self.rgb.shape[:2] != shape:
            raise DimensionMismatch(
                f"rgb is {self.rgb.shape[:2]}, thermal is {shape}"
            )
        if self.gt is not None and self.gt.shape != shape:
            raise DimensionMismatch(f"gt is {self.gt.shape}, thermal is {shape}")

    @property
    def height(self) -> int:
        return self.thermal.shape[0]

    @property
    def width(self) -> int:
        return self.thermal.shape[1]


@dataclass(frozen=True)
class PairPaths:
    """File locations of one dataset entry; ``load`` decodes it."""

    id: str
    rgb: Path
    thermal: Path
    gt: Path | None = None

    def load(self) -> ImagePair:
        return load_pair(self.rgb, self.thermal, self.gt, id=self.id)


def _decode(path) -> np.ndarray:
    """Decode an image file to a float raster in [0, 1]."""
    try:
        with Image.open(path) as img:
            arr = np.asarray(img)
    except (OSError, ValueError) as exc:
        raise DecodeError(f"cannot read image {path}: {exc}") from exc
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float64) / 65535.0
    if np.issubdtype(arr.dtype, np.floating):
        return arr.astype(np.float64)
    raise DecodeError(f"unsupported pixel type {arr.dtype} in {path}")


def _to_gray(arr: np.ndarray) -> np.ndarray:
    """Collapse a decoded raster to one channel by averaging."""
    if arr.ndim == 2:
        return arr
    return arr[..., :3].mean(axis=-1)


def binarize(mask: np.ndarray) -> np.ndarray:
    """Threshold a grayscale mask at 0.5 into {0, 1}. Idempotent."""
    return (np.asarray(mask, dtype=np.float64) >= 0.5).astype(np.float64)


def load_pair(rgb_path, thermal_path, gt_path=None, id: str = "") -> ImagePair:
    """Load an aligned RGB/thermal pair, with optional binarized ground truth.

    The RGB file must decode to 3 channels (an alpha channel is dropped);
    3-channel thermal files are averaged down to one channel.
    """
    rgb = _decode(rgb_path)
    if rgb.ndim != 3 or rgb.shape[2] < 3:
        raise DecodeError(f"{rgb_path} does not decode to 3 channels")
    rgb = rgb[..., :3]
    thermal = _to_gray(_decode(thermal_path))
    gt = None
    if gt_path is not None:
        gt = binarize(_to_gray(_decode(gt_path)))
    if not id:
        id = Path(rgb_path).stem
    return ImagePair(rgb=rgb, thermal=thermal, gt=gt, id=id)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert an sRGB raster in [0, 1] to CIE-LAB, rescaled to [0, 1].

    Pixels go through sRGB -> linear -> XYZ (D65) -> LAB; channels are then
    rescaled by the fixed channel bounds (L/100, (a+128)/255, (b+128)/255)
    so that feature distances do not depend on the image content.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ChannelError(f"expected an (H, W, 3) raster, got {rgb.shape}")
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3.0 * delta**2) + 4.0 / 29.0)
    lightness = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    lab = np.stack(
        [lightness / 100.0, (a + 128.0) / 255.0, (b + 128.0) / 255.0], axis=-1
    )
    return np.clip(lab, 0.0, 1.0)


def scan_dataset(root) -> list[PairPaths]:
    """List image pairs under ``root/RGB`` and ``root/T``, matched by stem.

    Entries appear for every stem present in both modality directories, in
    lexicographic order; a matching file under ``root/GT`` is attached when
    present.
    """
    root = Path(root)
    rgb_dir, t_dir, gt_dir = root / "RGB", root / "T", root / "GT"
    if not rgb_dir.is_dir() or not t_dir.is_dir():
        raise LayoutError(f"{root} must contain RGB/ and T/ subdirectories")

    def index(directory: Path) -> dict[str, Path]:
        files = {}
        for p in sorted(directory.iterdir()):
            if p.suffix.lower() in _IMAGE_EXTENSIONS and p.stem not in files:
                files[p.stem] = p
        return files

    rgb_files = index(rgb_dir)
    t_files = index(t_dir)
    gt_files = index(gt_dir) if gt_dir.is_dir() else {}
    return [
        PairPaths(id=stem, rgb=rgb_files[stem], thermal=t_files[stem],
                  gt=gt_files.get(stem))
        for stem in sorted(rgb_files.keys() & t_files.keys())
    ]


def save_gray_png(path, raster: np.ndarray) -> None:
    """Write a [0, 1] raster as 8-bit grayscale PNG (value*255, rounded)."""
    data = np.rint(np.clip(raster, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")


def load_gray(path) -> np.ndarray:
    """Read an image as a single-channel raster in [0, 1]."""
    return _to_gray(_decode(path))

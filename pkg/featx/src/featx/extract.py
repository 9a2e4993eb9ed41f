"""Batch extraction of convolutional feature maps over a dataset tree.

Reads ``<root>/RGB/<id>.*`` and ``<root>/T/<id>.*`` pairs, runs both
modalities through the backbone (thermal replicated to three channels),
and writes one tensor file per (image, modality, layer) as
``<id>.<modality>.<layer>.tens`` plus a checksum manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .backbone import LAYER_CHANNELS, extract_maps, load_backbone
from .errors import InferenceError, LayoutError
from .tensorio import write_tensor_atomic

_IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass
class ExtractionJob:
    dataset: Path
    out_dir: Path
    layers: tuple[str, ...] = ("conv1", "conv5")
    weights: str = "pretrained"
    seed: int = 0
    device: str = "cpu"
    batch_size: int = 1
    thermal_mode: str = "replicate"

    def __post_init__(self):
        self.dataset = Path(self.dataset)
        self.out_dir = Path(self.out_dir)
        if not self.layers:
            raise ValueError("layer list must not be empty")
        unknown = set(self.layers) - set(LAYER_CHANNELS)
        if unknown:
            raise ValueError(f"unknown layers: {sorted(unknown)}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.thermal_mode != "replicate":
            raise ValueError("only thermal_mode=replicate is implemented")


@dataclass
class Manifest:
    files: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def write(self, path) -> None:
        payload = {"files": sorted(self.files, key=lambda f: f["path"]),
                   "errors": self.errors}
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def scan_pairs(root: Path) -> list[tuple[str, Path, Path]]:
    rgb_dir, t_dir = root / "RGB", root / "T"
    if not rgb_dir.is_dir() or not t_dir.is_dir():
        raise LayoutError(f"{root} must contain RGB/ and T/ subdirectories")

    def index(directory):
        found = {}
        for p in sorted(directory.iterdir()):
            if p.suffix.lower() in _IMAGE_EXTENSIONS and p.stem not in found:
                found[p.stem] = p
        return found

    rgb, thermal = index(rgb_dir), index(t_dir)
    return [(stem, rgb[stem], thermal[stem])
            for stem in sorted(rgb.keys() & thermal.keys())]


def _load_image(path: Path, gray: bool) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L" if gray else "RGB"), dtype=np.float32)
    return arr / 255.0


def extract(job: ExtractionJob) -> Manifest:
    """Process every pair in the dataset; failures are recorded, not fatal."""
    backbone = load_backbone(job.weights, seed=job.seed, device=job.device)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest()
    queue: list[tuple[str, torch.Tensor, torch.Tensor]] = []

    def flush() -> None:
        if not queue:
            return
        ids = [image_id for image_id, _, _ in queue]
        try:
            batch = torch.stack(
                [row for _, rgb_t, t_t in queue for row in (rgb_t, t_t)]
            ).to(job.device)
            maps = extract_maps(backbone, batch)
            for idx, image_id in enumerate(ids):
                for layer in job.layers:
                    for offset, modality in enumerate(("rgb", "t")):
                        tensor = maps[layer][2 * idx + offset].cpu().numpy()
                        tensor = np.moveaxis(tensor, 0, -1)
                        name = f"{image_id}.{modality}.{layer}.tens"
                        out_path = job.out_dir / name
                        write_tensor_atomic(out_path, tensor)
                        manifest.files.append({
                            "path": name,
                            "sha256": hashlib.sha256(out_path.read_bytes()).hexdigest(),
                            "id": image_id,
                            "modality": modality,
                            "layer": layer,
                            "height": tensor.shape[0],
                            "width": tensor.shape[1],
                            "channels": tensor.shape[2],
                        })
        except Exception as exc:  # a bad batch must not stop the run
            for image_id in ids:
                manifest.errors.append({"id": image_id, "error": str(exc)})
        queue.clear()

    for image_id, rgb_path, t_path in scan_pairs(job.dataset):
        try:
            rgb = _load_image(rgb_path, gray=False)
            thermal = _load_image(t_path, gray=True)
            if rgb.shape[:2] != thermal.shape:
                raise InferenceError(
                    f"size mismatch: rgb {rgb.shape[:2]} vs thermal {thermal.shape}"
                )
        except Exception as exc:
            manifest.errors.append({"id": image_id, "error": str(exc)})
            continue
        rgb_t = torch.from_numpy(rgb).permute(2, 0, 1)
        t_t = torch.from_numpy(thermal)[None].repeat(3, 1, 1)
        if queue and (len(queue) >= job.batch_size
                      or queue[-1][1].shape[1:] != rgb_t.shape[1:]):
            flush()
        queue.append((image_id, rgb_t, t_t))
    flush()
    manifest.write(job.out_dir / "manifest.json")
    return manifest

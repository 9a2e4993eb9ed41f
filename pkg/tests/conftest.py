"""Shared synthetic fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from cglsal.graphs import GraphStack, build_affinity, laplacian
from cglsal.imgcore import ImagePair


def smooth_noise(shape, rng, sigma=6.0):
    """Low-frequency random field normalized to [-1, 1]."""
    field = gaussian_filter(rng.normal(size=shape), sigma)
    return field / (np.abs(field).max() + 1e-12)


def textured_rgb(shape, rng, base=0.4, amplitude=0.15, grain=0.01):
    channels = [
        base + amplitude * smooth_noise(shape, rng) + rng.normal(0.0, grain, shape)
        for _ in range(3)
    ]
    return np.clip(np.stack(channels, axis=-1), 0.0, 1.0)


def make_fixture(kind: str, seed: int = 0, h: int = 48, w: int = 64):
    """Synthetic RGB-T pair with ground truth.

    Kinds: ``big`` hot and bright block, ``t_only`` object visible only in
    the thermal channel, ``sso`` small salient object.
    """
    rng = np.random.default_rng(seed)
    gt = np.zeros((h, w))
    if kind == "big":
        rgb = textured_rgb((h, w), rng, base=0.35)
        thermal = 0.3 + 0.05 * smooth_noise((h, w), rng) + rng.normal(0, 0.01, (h, w))
        gt[14:34, 22:46] = 1.0
        rgb[gt > 0] = (0.85, 0.75, 0.3)
        thermal[gt > 0] = 0.9
    elif kind == "t_only":
        rgb = textured_rgb((h, w), rng, base=0.5, amplitude=0.22)
        thermal = 0.25 + 0.03 * smooth_noise((h, w), rng) + rng.normal(0, 0.01, (h, w))
        gt[14:34, 22:46] = 1.0
        thermal[gt > 0] = 0.9
    elif kind == "sso":
        rgb = textured_rgb((h, w), rng, base=0.4, amplitude=0.12)
        thermal = 0.35 + 0.04 * smooth_noise((h, w), rng) + rng.normal(0, 0.01, (h, w))
        gt[20:26, 30:38] = 1.0
        rgb[gt > 0] = (0.95, 0.9, 0.2)
        thermal[gt > 0] = 0.95
    elif kind == "two_objects":
        rgb = textured_rgb((h, w), rng, base=0.35)
        thermal = 0.3 + 0.04 * smooth_noise((h, w), rng) + rng.normal(0, 0.01, (h, w))
        gt[12:24, 10:24] = 1.0
        gt[28:40, 40:56] = 1.0
        rgb[gt > 0] = (0.9, 0.8, 0.25)
        thermal[gt > 0] = 0.92
    else:
        raise ValueError(kind)
    pair = ImagePair(rgb=np.clip(rgb, 0.0, 1.0), thermal=np.clip(thermal, 0.0, 1.0),
                     gt=gt, id=f"{kind}{seed}")
    return pair, gt


def random_pair(seed: int, h: int = 48, w: int = 64, smooth: bool = False) -> ImagePair:
    rng = np.random.default_rng(seed)
    if smooth:
        rgb = textured_rgb((h, w), rng, base=0.5, amplitude=0.3, grain=0.0)
        thermal = np.clip(0.5 + 0.3 * smooth_noise((h, w), rng), 0.0, 1.0)
    else:
        rgb = rng.random((h, w, 3))
        thermal = rng.random((h, w))
    return ImagePair(rgb=rgb, thermal=thermal, id=f"rand{seed}")


def random_stack(rng, n: int, M: int = 2, K: int = 2) -> GraphStack:
    """Random connected graph stack built through the real constructors."""
    adj = np.zeros((n, n), dtype=bool)
    for i in range(1, n):
        j = int(rng.integers(0, i))
        adj[i, j] = adj[j, i] = True
    extra = np.triu(rng.random((n, n)) < 0.3, 1)
    adj |= extra | extra.T
    np.fill_diagonal(adj, False)
    affinities, laplacians = {}, {}
    for m in range(M):
        for k in range(K):
            a = build_affinity(rng.random((n, 3)), adj, sigma=float(rng.uniform(1, 30)))
            affinities[(m, k)] = a
            laplacians[(m, k)] = laplacian(a)
    return GraphStack(n=n, adjacency=adj, affinities=affinities,
                      laplacians=laplacians, sigmas=(20.0, 40.0)[:M],
                      modalities=("rgb", "t")[:M], K=K)


def write_dataset(root, pairs) -> None:
    """Materialize image pairs as a RGB/ T/ GT/ directory tree."""
    from cglsal.imgcore import save_gray_png
    from PIL import Image

    (root / "RGB").mkdir(parents=True)
    (root / "T").mkdir()
    (root / "GT").mkdir()
    for pair in pairs:
        rgb8 = np.rint(pair.rgb * 255.0).astype(np.uint8)
        Image.fromarray(rgb8).save(root / "RGB" / f"{pair.id}.png")
        save_gray_png(root / "T" / f"{pair.id}.png", pair.thermal)
        if pair.gt is not None:
            save_gray_png(root / "GT" / f"{pair.id}.png", pair.gt)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

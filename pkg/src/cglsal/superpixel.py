"""Joint SLIC superpixels over an aligned RGB-thermal pair.

The thermal intensity enters the clustering as a fourth feature channel next
to the rescaled L, a, b channels, so both modalities share a single label
map. Seeding is a fixed regular grid and all updates run in a fixed order,
so segmentation is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage.measure import label as _connected_components

from .errors import TooSmall
from .imgcore import ImagePair, rgb_to_lab

#: Spatial-versus-feature weight. Feature channels live in [0, 1], roughly
#: one hundredth of the native LAB range, so the classic compactness of ~10
#: scales down to a few tenths; larger values ignore color edges entirely.
DEFAULT_COMPACTNESS = 0.3

SIDES = ("top", "bottom", "left", "right")


@dataclass(frozen=True)
class SuperpixelMap:
    """Label raster with per-superpixel metadata.

    ``labels`` holds one id in [0, n) per pixel; ``centroids`` is the mean
    (x, y) of each superpixel; ``boundary_sides`` is an (n, 4) boolean array
    over SIDES marking superpixels that own at least one border pixel.
    """

    labels: np.ndarray
    n: int
    centroids: np.ndarray
    sizes: np.ndarray
    boundary_sides: np.ndarray

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def side_nodes(self, side: str) -> np.ndarray:
        """Boolean vector of superpixels touching one image side."""
        return self.boundary_sides[:, SIDES.index(side)]


def slic_segment(
    pair: ImagePair,
    n_target: int = 300,
    compactness: float = DEFAULT_COMPACTNESS,
    max_iters: int = 10,
) -> SuperpixelMap:
    """Segment an RGB-T pair into roughly ``n_target`` superpixels.

    Local k-means in the joint (L, a, b, T, x, y) space; the spatial
    distance is weighted by ``(compactness / step)**2`` where ``step`` is
    the seed grid interval. Fragments disconnected from their cluster are
    absorbed afterwards so every superpixel is 4-connected.
    """
    h, w = pair.thermal.shape
    if h < 2 or w < 2:
        raise TooSmall(f"cannot segment a {w}x{h} image")
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    if n_target > h * w:
        raise TooSmall(f"{n_target} superpixels exceed the {w}x{h} pixel count")

    feat = np.concatenate([rgb_to_lab(pair.rgb), pair.thermal[..., None]], axis=-1)

    gy = max(1, round(math.sqrt(n_target * h / w)))
    gy = min(gy, h)
    gx = min(max(1, round(n_target / gy)), w)
    n_init = gx * gy
    step = math.sqrt(h * w / n_init)
    if step < 1.0:
        raise TooSmall(f"grid step below one pixel for n_target={n_target}")

    # Initial assignment: regular spatial tiles, one per grid seed.
    row_bin = np.minimum(np.arange(h) * gy // h, gy - 1)
    col_bin = np.minimum(np.arange(w) * gx // w, gx - 1)
    labels = (row_bin[:, None] * gx + col_bin[None, :]).astype(np.int32)

    ygrid = np.repeat(np.arange(h, dtype=np.float64), w)
    xgrid = np.tile(np.arange(w, dtype=np.float64), h)
    centers_f = np.zeros((n_init, feat.shape[2]))
    centers_y = np.zeros(n_init)
    centers_x = np.zeros(n_init)

    def update_centers() -> None:
        flat = labels.ravel()
        counts = np.bincount(flat, minlength=n_init).astype(np.float64)
        occ = counts > 0
        for d in range(feat.shape[2]):
            sums = np.bincount(flat, weights=feat[..., d].ravel(), minlength=n_init)
            centers_f[occ, d] = sums[occ] / counts[occ]
        centers_y[occ] = np.bincount(flat, weights=ygrid, minlength=n_init)[occ] / counts[occ]
        centers_x[occ] = np.bincount(flat, weights=xgrid, minlength=n_init)[occ] / counts[occ]

    update_centers()
    ratio2 = (compactness / step) ** 2
    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)

    for _ in range(max_iters):
        dist = np.full((h, w), np.inf)
        new_labels = labels.copy()
        for c in range(n_init):
            r0 = max(int(centers_y[c] - step), 0)
            r1 = min(int(centers_y[c] + step) + 1, h)
            c0 = max(int(centers_x[c] - step), 0)
            c1 = min(int(centers_x[c] + step) + 1, w)
            if r0 >= r1 or c0 >= c1:
                continue
            d2 = ((feat[r0:r1, c0:c1] - centers_f[c]) ** 2).sum(axis=-1)
            d2 += ratio2 * (
                (ys[r0:r1, None] - centers_y[c]) ** 2
                + (xs[None, c0:c1] - centers_x[c]) ** 2
            )
            window = dist[r0:r1, c0:c1]
            better = d2 < window
            window[better] = d2[better]
            new_labels[r0:r1, c0:c1][better] = c
        labels = new_labels
        update_centers()

    labels = _absorb_orphans(labels)
    return _finalize(labels)


def _absorb_orphans(labels: np.ndarray) -> np.ndarray:
    """Merge disconnected fragments so each label is one 4-connected region.

    Every label keeps its largest fragment (ties to the earlier fragment in
    raster order); each remaining fragment joins the neighboring label it
    shares the most 4-neighbor boundary pixels with, lowest label on ties.
    Only contacts with kept fragments count, so merged pixels always attach
    to a connected region and the sweep terminates; enclosed fragments are
    exposed layer by layer on later sweeps.
    """
    labels = labels.copy()
    n_labels = int(labels.max()) + 1
    progressed = True
    while True:
        comp = _connected_components(labels, connectivity=1, background=-1) - 1
        n_comp = int(comp.max()) + 1
        comp_flat = comp.ravel()
        comp_sizes = np.bincount(comp_flat, minlength=n_comp)
        comp_label = np.zeros(n_comp, dtype=np.int64)
        comp_label[comp_flat] = labels.ravel()

        order = np.lexsort((np.arange(n_comp), -comp_sizes))
        keep = np.zeros(n_comp, dtype=bool)
        seen: set[int] = set()
        for ci in order:
            if comp_label[ci] not in seen:
                seen.add(int(comp_label[ci]))
                keep[ci] = True
        if keep.all():
            break
        if not progressed:
            raise RuntimeError("connectivity enforcement stalled")

        # Shared-boundary counts between orphan fragments and kept labels.
        contact = np.zeros((n_comp, n_labels), dtype=np.int64)
        for a, b in (
            (np.s_[:-1, :], np.s_[1:, :]),
            (np.s_[:, :-1], np.s_[:, 1:]),
        ):
            ca, cb = comp[a], comp[b]
            la, lb = labels[a], labels[b]
            mask = (ca != cb) & keep[cb]
            np.add.at(contact, (ca[mask], lb[mask]), 1)
            mask = (cb != ca) & keep[ca]
            np.add.at(contact, (cb[mask], la[mask]), 1)

        mergeable = ~keep & (contact.max(axis=1) > 0)
        target = contact.argmax(axis=1)  # argmax takes the lowest label on ties
        new_of_comp = np.where(mergeable, target, comp_label)
        labels = new_of_comp[comp].astype(np.int32)
        progressed = bool(mergeable.any())
    return labels


def _finalize(labels: np.ndarray) -> SuperpixelMap:
    """Relabel densely and compute sizes, centroids, and border flags."""
    ids = np.unique(labels)
    remap = np.zeros(int(ids.max()) + 1, dtype=np.int32)
    remap[ids] = np.arange(len(ids), dtype=np.int32)
    labels = remap[labels]
    n = len(ids)
    h, w = labels.shape
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=n)
    xsum = np.bincount(flat, weights=np.tile(np.arange(w, dtype=np.float64), h), minlength=n)
    ysum = np.bincount(flat, weights=np.repeat(np.arange(h, dtype=np.float64), w), minlength=n)
    centroids = np.stack([xsum / sizes, ysum / sizes], axis=1)

    boundary = np.zeros((n, 4), dtype=bool)
    for si, border in enumerate(
        (labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1])
    ):
        boundary[np.unique(border), si] = True
    return SuperpixelMap(
        labels=labels, n=n, centroids=centroids, sizes=sizes, boundary_sides=boundary
    )


def adjacency(smap: SuperpixelMap) -> np.ndarray:
    """Symmetric, irreflexive 8-neighborhood relation between superpixels."""
    lab = smap.labels
    adj = np.zeros((smap.n, smap.n), dtype=bool)
    for a, b in (
        (lab[:, :-1], lab[:, 1:]),
        (lab[:-1, :], lab[1:, :]),
        (lab[:-1, :-1], lab[1:, 1:]),
        (lab[:-1, 1:], lab[1:, :-1]),
    ):
        diff = a != b
        adj[a[diff], b[diff]] = True
    adj |= adj.T
    np.fill_diagonal(adj, False)
    return adj


def extend_adjacency(adj: np.ndarray, smap: SuperpixelMap) -> np.ndarray:
    """Add neighbor-of-neighbor edges and connect all boundary superpixels."""
    ext = adj | (adj @ adj)
    border = smap.boundary_sides.any(axis=1)
    ext[np.ix_(border, border)] = True
    np.fill_diagonal(ext, False)
    return ext | ext.T

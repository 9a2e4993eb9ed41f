import subprocess
import sys

import numpy as np
import pytest
from scipy import ndimage

from cglsal.errors import TooSmall
from cglsal.imgcore import ImagePair
from cglsal.superpixel import SIDES, adjacency, extend_adjacency, slic_segment
from conftest import random_pair
from oracles import brute_force_adjacency


def uniform_pair(h, w, value=0.5):
    return ImagePair(rgb=np.full((h, w, 3), value), thermal=np.full((h, w), value),
                     id="uniform")


class TestSlicSegment:
    def test_uniform_image_gives_grid(self):
        smap = slic_segment(uniform_pair(64, 64), n_target=16)
        assert smap.n == 16
        # centroids on a 4x4 grid within one pixel
        expected = [(i + 0.5) * 16 for i in range(4)]
        xs = np.sort(np.unique(np.round(smap.centroids[:, 0], 3)))
        ys = np.sort(np.unique(np.round(smap.centroids[:, 1], 3)))
        assert len(xs) == 4 and len(ys) == 4
        assert np.abs(xs - expected).max() <= 1.0
        assert np.abs(ys - expected).max() <= 1.0

    def test_count_contract_at_standard_size(self):
        pair = random_pair(3, h=480, w=640, smooth=True)
        smap = slic_segment(pair, n_target=300)
        assert 150 <= smap.n <= 450
        assert smap.sizes.sum() == 480 * 640
        assert set(np.unique(smap.labels)) == set(range(smap.n))

    def test_two_tone_split_respected(self):
        h, w = 32, 32
        rgb = np.zeros((h, w, 3))
        rgb[:, 20:] = 1.0
        thermal = np.zeros((h, w))
        thermal[:, 20:] = 1.0
        pair = ImagePair(rgb=rgb, thermal=thermal, id="twotone")
        smap = slic_segment(pair, n_target=2, compactness=1.0)
        # no label may span the tone boundary
        left = set(np.unique(smap.labels[:, :20]))
        right = set(np.unique(smap.labels[:, 20:]))
        assert left.isdisjoint(right)

    def test_too_small_image(self):
        with pytest.raises(TooSmall):
            slic_segment(uniform_pair(1, 10), n_target=4)

    def test_too_many_superpixels(self):
        with pytest.raises(TooSmall):
            slic_segment(uniform_pair(4, 4), n_target=300)

    def test_deterministic_reruns(self):
        pair = random_pair(7, smooth=False)
        a = slic_segment(pair, n_target=50)
        b = slic_segment(pair, n_target=50)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.centroids, b.centroids)

    def test_deterministic_across_thread_counts(self, tmp_path):
        script = (
            "import numpy as np, hashlib\n"
            "from cglsal.imgcore import ImagePair\n"
            "from cglsal.superpixel import slic_segment\n"
            "rng = np.random.default_rng(11)\n"
            "pair = ImagePair(rgb=rng.random((40, 52, 3)), thermal=rng.random((40, 52)), id='x')\n"
            "smap = slic_segment(pair, n_target=40)\n"
            "print(hashlib.sha256(smap.labels.tobytes()).hexdigest())\n"
        )
        import os

        digests = set()
        for threads in ("1", "4"):
            env = dict(os.environ,
                       OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads,
                       MKL_NUM_THREADS=threads)
            out = subprocess.run([sys.executable, "-c", script], env=env,
                                 capture_output=True, text=True, check=True)
            digests.add(out.stdout.strip())
        assert len(digests) == 1

    def test_every_superpixel_4_connected(self):
        for seed in (0, 1):
            pair = random_pair(seed, smooth=seed == 1)
            smap = slic_segment(pair, n_target=60)
            for label in range(smap.n):
                _, pieces = ndimage.label(smap.labels == label)
                assert pieces == 1

    def test_boundary_side_flags(self):
        pair = random_pair(5, smooth=True)
        smap = slic_segment(pair, n_target=40)
        borders = {
            "top": smap.labels[0, :], "bottom": smap.labels[-1, :],
            "left": smap.labels[:, 0], "right": smap.labels[:, -1],
        }
        for si, side in enumerate(SIDES):
            expected = np.zeros(smap.n, dtype=bool)
            expected[np.unique(borders[side])] = True
            assert np.array_equal(smap.boundary_sides[:, si], expected)

    def test_sizes_and_centroids_consistent(self):
        pair = random_pair(9, smooth=True)
        smap = slic_segment(pair, n_target=30)
        for label in (0, smap.n // 2, smap.n - 1):
            ys, xs = np.nonzero(smap.labels == label)
            assert smap.sizes[label] == len(xs)
            assert smap.centroids[label, 0] == pytest.approx(xs.mean())
            assert smap.centroids[label, 1] == pytest.approx(ys.mean())


class TestAdjacency:
    def _tiles(self, rows, cols, th, tw):
        labels = np.zeros((rows * th, cols * tw), dtype=np.int32)
        for r in range(rows):
            for c in range(cols):
                labels[r * th:(r + 1) * th, c * tw:(c + 1) * tw] = r * cols + c
        return labels

    def _map_from_labels(self, labels):
        from cglsal.superpixel import _finalize

        return _finalize(labels)

    def test_2x2_grid_all_pairs_adjacent(self):
        smap = self._map_from_labels(self._tiles(2, 2, 4, 4))
        adj = adjacency(smap)
        assert adj.sum() == 12  # all 6 unordered pairs, both directions
        assert not adj.diagonal().any()

    def test_1x3_strip(self):
        smap = self._map_from_labels(self._tiles(1, 3, 5, 4))
        adj = adjacency(smap)
        assert adj[0, 1] and adj[1, 2]
        assert not adj[0, 2]

    def test_matches_brute_force(self):
        for seed in (0, 1, 2):
            pair = random_pair(seed, h=24, w=28, smooth=seed != 0)
            smap = slic_segment(pair, n_target=12)
            assert np.array_equal(adjacency(smap), brute_force_adjacency(smap.labels, smap.n))

    def test_symmetric_irreflexive(self):
        pair = random_pair(4, smooth=True)
        smap = slic_segment(pair, n_target=25)
        adj = adjacency(smap)
        assert np.array_equal(adj, adj.T)
        assert not adj.diagonal().any()

    def test_graph_connected_for_full_frame_images(self):
        from scipy.sparse.csgraph import connected_components

        for seed in (0, 3, 8):
            pair = random_pair(seed, smooth=True)
            smap = slic_segment(pair, n_target=45)
            pieces, _ = connected_components(adjacency(smap), directed=False)
            assert pieces == 1

    def test_extended_adds_boundary_clique(self):
        pair = random_pair(6, smooth=True)
        smap = slic_segment(pair, n_target=40)
        adj = adjacency(smap)
        ext = extend_adjacency(adj, smap)
        assert (ext & ~adj).any()
        border = np.nonzero(smap.boundary_sides.any(axis=1))[0]
        assert ext[border[0], border[-1]]
        assert not ext.diagonal().any()

"""Structure-fixed affinity graphs and their Laplacians.

One affinity matrix per (modality, feature) pair: spatially adjacent
superpixels are connected with weight ``exp(-sigma * ||x_i - x_j||)``;
everything else, including the diagonal, is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFinite
from .features import FeatureSet


def build_affinity(vectors: np.ndarray, adj: np.ndarray, sigma: float) -> np.ndarray:
    """Dense affinity over the given adjacency from feature distances."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    vectors = np.asarray(vectors, dtype=np.float64)
    if not np.isfinite(vectors).all():
        raise NonFinite("feature vectors contain NaN or infinity")
    n = vectors.shape[0]
    affinity = np.zeros((n, n))
    i, j = np.nonzero(np.triu(adj, 1))
    dist = np.linalg.norm(vectors[i] - vectors[j], axis=1)
    affinity[i, j] = np.exp(-sigma * dist)
    affinity[j, i] = affinity[i, j]
    return affinity


def laplacian(affinity: np.ndarray) -> np.ndarray:
    """Unnormalized graph Laplacian D - A (rows sum to zero, PSD)."""
    lap = -np.asarray(affinity, dtype=np.float64).copy()
    np.fill_diagonal(lap, np.diag(lap) + affinity.sum(axis=1))
    return lap


@dataclass(frozen=True)
class GraphStack:
    """All per-(modality, feature) affinities and Laplacians of one image."""

    n: int
    adjacency: np.ndarray
    affinities: dict[tuple[int, int], np.ndarray]
    laplacians: dict[tuple[int, int], np.ndarray]
    sigmas: tuple[float, ...]
    modalities: tuple[str, ...]
    K: int

    @property
    def M(self) -> int:
        return len(self.modalities)

    def pairs(self):
        """Deterministic iteration order over (m, k) indices."""
        return [(m, k) for m in range(self.M) for k in range(self.K)]


def build_stack(
    features: FeatureSet,
    adj: np.ndarray,
    sigma_rgb: float = 20.0,
    sigma_t: float = 40.0,
) -> GraphStack:
    """Build affinities and Laplacians for every (modality, feature) pair.

    One sigma per modality, shared across its feature layers.
    """
    sigma_of = {"rgb": float(sigma_rgb), "t": float(sigma_t)}
    sigmas = tuple(sigma_of[name] for name in features.modalities)
    affinities: dict[tuple[int, int], np.ndarray] = {}
    laplacians: dict[tuple[int, int], np.ndarray] = {}
    for m in range(features.M):
        for k in range(features.K):
            a = build_affinity(features.vectors[(m, k)], adj, sigmas[m])
            affinities[(m, k)] = a
            laplacians[(m, k)] = laplacian(a)
    return GraphStack(
        n=features.n,
        adjacency=adj,
        affinities=affinities,
        laplacians=laplacians,
        sigmas=sigmas,
        modalities=features.modalities,
        K=features.K,
    )

"""Two-stage saliency ranking with boundary and foreground queries.

Stage one ranks against each image side separately, inverts and multiplies
the four maps; stage two thresholds that product at its mean to pick
foreground queries and ranks once more. Each ranking either runs the full
joint graph-learning solve or, in fixed-graph mode, a single propagation
over the mean of the structure-fixed affinities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .errors import CGLError, FormatError, NoBoundary
from .features import DEEP_LAYERS, assemble, deep_feature_path
from .graphs import GraphStack, build_stack
from .imgcore import ImagePair
from .solver import SolverParams, SolverState, solve, update_s
from .superpixel import SIDES, SuperpixelMap, adjacency, extend_adjacency, slic_segment


@dataclass(frozen=True)
class SaliencyMap:
    """Per-superpixel saliency in [0, 1] plus its full-resolution rendering."""

    values: np.ndarray
    rendered: np.ndarray


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1]; an exactly constant vector maps to all zeros."""
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def boundary_queries(smap: SuperpixelMap, side: str) -> np.ndarray:
    """Indicator of superpixels owning at least one pixel on ``side``."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    nodes = smap.side_nodes(side)
    if not nodes.any():
        raise NoBoundary(f"no superpixel touches the {side} side")
    return nodes.astype(np.float64)


def mean_affinity(stack: GraphStack) -> np.ndarray:
    """Average of the structure-fixed affinities, used in fixed-graph mode."""
    total = np.zeros((stack.n, stack.n))
    for key in stack.pairs():
        total += stack.affinities[key]
    return total / len(stack.pairs())


def _rank(stack: GraphStack, y: np.ndarray, params: SolverParams, fixed_graph: bool,
          states: list[SolverState] | None = None) -> np.ndarray:
    if fixed_graph:
        return update_s(mean_affinity(stack), y, params.lambda1)
    state = solve(stack, y, params)
    if states is not None:
        states.append(state)
    return state.s


def background_stage(
    stack: GraphStack,
    smap: SuperpixelMap,
    params: SolverParams,
    fixed_graph: bool = False,
    states: list[SolverState] | None = None,
) -> np.ndarray:
    """Product of the four inverted, normalized side rankings."""
    combined = np.ones(stack.n)
    for side in SIDES:
        y = boundary_queries(smap, side)
        ranked = minmax_normalize(_rank(stack, y, params, fixed_graph, states))
        combined = combined * (1.0 - ranked)
    return combined


def foreground_stage(
    stack: GraphStack,
    smap: SuperpixelMap,
    background_scores: np.ndarray,
    params: SolverParams,
    fixed_graph: bool = False,
    states: list[SolverState] | None = None,
) -> SaliencyMap:
    """Rank against above-mean background-stage nodes and normalize."""
    y = (background_scores > background_scores.mean()).astype(np.float64)
    if not y.any():
        # Degenerate threshold; fall back to the first maximal node.
        y[int(np.argmax(background_scores))] = 1.0
    ranked = _rank(stack, y, params, fixed_graph, states)
    values = minmax_normalize(ranked)
    return SaliencyMap(values=values, rendered=values[smap.labels])


def build_graphs(pair: ImagePair, smap: SuperpixelMap, config: Config) -> GraphStack:
    """Features and affinity stack for one segmented pair, per the config."""
    deep_paths = None
    if config.deep_features:
        if not config.features_dir:
            raise CGLError("deep_features is on but features_dir is not set")
        deep_paths = {}
        for name in config.modality_names():
            for layer in DEEP_LAYERS:
                path = deep_feature_path(config.features_dir, pair.id, name, layer)
                if not path.is_file():
                    raise FormatError(f"missing deep feature file {path}")
                deep_paths[(name, layer)] = path
    feats = assemble(pair, smap, deep_paths, modalities=config.modality_names())
    adj = adjacency(smap)
    if config.extended_adjacency:
        adj = extend_adjacency(adj, smap)
    return build_stack(feats, adj, config.sigma_rgb, config.sigma_t)


def detect(
    pair: ImagePair,
    config: Config | None = None,
    states: list[SolverState] | None = None,
) -> SaliencyMap:
    """Full detection pipeline for one aligned RGB-thermal pair."""
    if config is None:
        config = Config()
    smap = slic_segment(
        pair,
        n_target=config.n_superpixels,
        compactness=config.compactness,
        max_iters=config.slic_iters,
    )
    stack = build_graphs(pair, smap, config)
    params = config.solver_params()
    scores = background_stage(stack, smap, params, config.fixed_graph, states)
    return foreground_stage(stack, smap, scores, params, config.fixed_graph, states)

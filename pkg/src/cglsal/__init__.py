"""RGB-thermal salient object detection via collaborative graph learning."""

from .config import Config, load_config
from .imgcore import ImagePair, load_pair, rgb_to_lab, scan_dataset
from .metrics import evaluate_dataset, f_measure, pr_curve
from .ranking import SaliencyMap, detect
from .solver import SolverParams, SolverState, solve
from .superpixel import SuperpixelMap, adjacency, slic_segment

__all__ = [
    "Config",
    "ImagePair",
    "SaliencyMap",
    "SolverParams",
    "SolverState",
    "SuperpixelMap",
    "adjacency",
    "detect",
    "evaluate_dataset",
    "f_measure",
    "load_config",
    "load_pair",
    "pr_curve",
    "rgb_to_lab",
    "scan_dataset",
    "slic_segment",
    "solve",
]

__version__ = "0.1.0"

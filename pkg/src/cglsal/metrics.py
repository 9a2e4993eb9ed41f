"""Evaluation harness: PR curves, F-measure, and dataset aggregation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyGT, IdMismatch, MissingGT

F_BETA2 = 0.3
N_THRESHOLDS = 256


@dataclass(frozen=True)
class PRCurve:
    """Precision and recall at every binarization threshold 0..255.

    A pixel counts as retrieved at threshold t when saliency*255 >= t.
    Precision defaults to 1 when nothing is retrieved, so all 256 points
    are defined; recall is always defined because the ground truth is
    required to be nonempty.
    """

    precision: np.ndarray
    recall: np.ndarray


@dataclass
class ImageScore:
    id: str
    precision: float
    recall: float
    f_measure: float


@dataclass
class EvalReport:
    """Per-image scores at the adaptive threshold plus dataset means."""

    images: list[ImageScore]
    mean_precision: float
    mean_recall: float
    mean_f: float
    max_f: float
    mean_curve: PRCurve
    attributes: dict[str, dict[str, float]] = field(default_factory=dict)


def pr_curve(saliency: np.ndarray, gt: np.ndarray) -> PRCurve:
    """Exact PR curve over the 256 integer thresholds."""
    saliency = np.asarray(saliency, dtype=np.float64)
    gt = np.asarray(gt)
    if saliency.shape != gt.shape:
        raise DimensionMismatch(f"saliency {saliency.shape} vs gt {gt.shape}")
    positive = gt > 0.5
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise EmptyGT("ground truth has no positive pixels")
    levels = np.clip(np.floor(saliency * 255.0), 0, 255).astype(np.intp)
    hist_all = np.bincount(levels.ravel(), minlength=N_THRESHOLDS)
    hist_pos = np.bincount(levels[positive], minlength=N_THRESHOLDS)
    retrieved = np.cumsum(hist_all[::-1])[::-1].astype(np.float64)
    tp = np.cumsum(hist_pos[::-1])[::-1].astype(np.float64)
    precision = np.where(retrieved > 0, tp / np.where(retrieved > 0, retrieved, 1.0), 1.0)
    recall = tp / n_pos
    return PRCurve(precision=precision, recall=recall)


def f_measure(precision: float, recall: float, beta2: float = F_BETA2) -> float:
    """Weighted harmonic mean of precision and recall; 0 when both are 0."""
    if precision == 0.0 and recall == 0.0:
        return 0.0
    return (1.0 + beta2) * precision * recall / (beta2 * precision + recall)


def adaptive_threshold_score(saliency: np.ndarray, gt: np.ndarray,
                             beta2: float = F_BETA2) -> tuple[float, float, float]:
    """P, R, F at twice the mean saliency, clamped below 1."""
    saliency = np.asarray(saliency, dtype=np.float64)
    positive = np.asarray(gt) > 0.5
    if not positive.any():
        raise EmptyGT("ground truth has no positive pixels")
    threshold = min(2.0 * float(saliency.mean()), 1.0 - 1e-9)
    retrieved = saliency >= threshold
    n_retrieved = int(retrieved.sum())
    tp = int((retrieved & positive).sum())
    precision = tp / n_retrieved if n_retrieved else 1.0
    recall = tp / int(positive.sum())
    return precision, recall, f_measure(precision, recall, beta2)


def read_attributes(path) -> dict[str, list[str]]:
    """Parse an ``id,attr1;attr2;...`` sidecar file."""
    tags: dict[str, list[str]] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        image_id, _, attrs = line.partition(",")
        tags[image_id.strip()] = [a.strip() for a in attrs.split(";") if a.strip()]
    return tags


def evaluate_dataset(
    saliency_by_id: dict[str, np.ndarray],
    pairs,
    attributes: dict[str, list[str]] | None = None,
) -> EvalReport:
    """Score every pair against its saliency map and aggregate.

    ``pairs`` yields loaded image pairs (or anything with ``id`` and ``gt``).
    Every pair must have ground truth and a saliency map under its id.
    """
    images = []
    curves = []
    for pair in pairs:
        if pair.gt is None:
            raise MissingGT(f"pair {pair.id!r} has no ground truth")
        if pair.id not in saliency_by_id:
            raise IdMismatch(f"no saliency map for id {pair.id!r}")
        saliency = saliency_by_id[pair.id]
        p, r, f = adaptive_threshold_score(saliency, pair.gt)
        images.append(ImageScore(id=pair.id, precision=p, recall=r, f_measure=f))
        curves.append(pr_curve(saliency, pair.gt))
    if not images:
        raise IdMismatch("no images to evaluate")

    mean_p = float(np.mean([s.precision for s in images]))
    mean_r = float(np.mean([s.recall for s in images]))
    mean_f = float(np.mean([s.f_measure for s in images]))
    curve_p = np.mean([c.precision for c in curves], axis=0)
    curve_r = np.mean([c.recall for c in curves], axis=0)
    curve_f = [f_measure(p, r) for p, r in zip(curve_p, curve_r)]
    report = EvalReport(
        images=images,
        mean_precision=mean_p,
        mean_recall=mean_r,
        mean_f=mean_f,
        max_f=float(np.max(curve_f)),
        mean_curve=PRCurve(precision=curve_p, recall=curve_r),
    )
    if attributes:
        by_attr: dict[str, list[ImageScore]] = {}
        for score in images:
            for tag in attributes.get(score.id, []):
                by_attr.setdefault(tag, []).append(score)
        for tag in sorted(by_attr):
            subset = by_attr[tag]
            report.attributes[tag] = {
                "precision": float(np.mean([s.precision for s in subset])),
                "recall": float(np.mean([s.recall for s in subset])),
                "f_measure": float(np.mean([s.f_measure for s in subset])),
                "count": float(len(subset)),
            }
    return report


def write_report_csv(path, report: EvalReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "precision", "recall", "f_measure"])
        for score in report.images:
            writer.writerow(
                [score.id, f"{score.precision:.6f}", f"{score.recall:.6f}",
                 f"{score.f_measure:.6f}"]
            )
        writer.writerow(["MEAN", f"{report.mean_precision:.6f}",
                         f"{report.mean_recall:.6f}", f"{report.mean_f:.6f}"])
        for tag, stats in report.attributes.items():
            writer.writerow([f"ATTR:{tag}", f"{stats['precision']:.6f}",
                             f"{stats['recall']:.6f}", f"{stats['f_measure']:.6f}"])


def write_report_json(path, report: EvalReport) -> None:
    payload = {
        "mean_precision": report.mean_precision,
        "mean_recall": report.mean_recall,
        "mean_f": report.mean_f,
        "max_f_on_mean_curve": report.max_f,
        "images": {
            s.id: {"precision": s.precision, "recall": s.recall, "f_measure": s.f_measure}
            for s in report.images
        },
        "attributes": report.attributes,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_pr_csv(path, curve: PRCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall"])
        for t in range(N_THRESHOLDS):
            writer.writerow([t, f"{curve.precision[t]:.6f}", f"{curve.recall[t]:.6f}"])

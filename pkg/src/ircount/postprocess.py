"""Detector output post-processing and score-threshold tuning.

Detections pass through greedy non-maximum suppression once, then a
confidence sweep finds the score threshold whose per-image box counts
maximize count accuracy against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ircount.corpus import BoundingBox, Dataset, aligned_records, annotation_to_count
from ircount.metrics import CountPair, count_metrics


@dataclass(frozen=True)
class ThresholdCurve:
    """Accuracy as a function of confidence threshold.

    ``best_threshold`` is the smallest threshold attaining the maximum
    accuracy.
    """

    thresholds: tuple[float, ...]
    accuracies: tuple[float, ...]
    best_threshold: float
    best_accuracy: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "thresholds", tuple(self.thresholds))
        object.__setattr__(self, "accuracies", tuple(self.accuracies))
        if len(self.thresholds) != len(self.accuracies) or not self.thresholds:
            raise ValueError("thresholds and accuracies must be equal-length and non-empty")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly ascending")
        if self.thresholds[0] < 0.0 or self.thresholds[-1] > 1.0:
            raise ValueError("thresholds must lie in [0, 1]")
        if any(not 0.0 <= a <= 1.0 for a in self.accuracies):
            raise ValueError("accuracies must lie in [0, 1]")
        if self.best_accuracy != max(self.accuracies):
            raise ValueError("best_accuracy must equal max(accuracies)")
        expect = next(t for t, a in zip(self.thresholds, self.accuracies) if a == self.best_accuracy)
        if self.best_threshold != expect:
            raise ValueError("best_threshold must be the smallest threshold attaining the max")

    @classmethod
    def from_sweep(cls, thresholds: Sequence[float], accuracies: Sequence[float]) -> "ThresholdCurve":
        best_acc = max(accuracies)
        best_thr = next(t for t, a in zip(thresholds, accuracies) if a == best_acc)
        return cls(tuple(thresholds), tuple(accuracies), best_thr, best_acc)


def _corners(b: BoundingBox) -> tuple[float, float, float, float]:
    return (b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two center-size boxes; disjoint boxes give 0.

    All areas derive from the same corner coordinates so identical boxes
    score exactly 1.0.
    """
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def confidence_filter(boxes: Sequence[BoundingBox], conf: float) -> list[BoundingBox]:
    """Keep boxes scoring at least ``conf``, preserving order."""
    if not 0.0 <= conf <= 1.0:
        raise ValueError(f"confidence threshold must be in [0, 1], got {conf}")
    return [b for b in boxes if b.score >= conf]


def nms(boxes: Sequence[BoundingBox], iou_thresh: float) -> list[BoundingBox]:
    """Greedy non-maximum suppression.

    Boxes are visited by descending score (ties by original index); a box
    is kept unless it overlaps an already-kept box with IoU strictly above
    the threshold. The kept boxes come back in their original input order.
    """
    if not 0.0 <= iou_thresh <= 1.0:
        raise ValueError(f"IoU threshold must be in [0, 1], got {iou_thresh}")
    order = sorted(range(len(boxes)), key=lambda i: (-boxes[i].score, i))
    kept: list[int] = []
    for i in order:
        if all(iou(boxes[i], boxes[k]) <= iou_thresh for k in kept):
            kept.append(i)
    return [boxes[i] for i in sorted(kept)]


def default_grid(step: float = 0.001) -> list[float]:
    """Ascending threshold grid over [0, 1] with the given step."""
    if not 0.0 < step <= 1.0:
        raise ValueError(f"grid step must be in (0, 1], got {step}")
    count = int(round(1.0 / step))
    return [min(i * step, 1.0) for i in range(count + 1)]


def tune_threshold(
    pred: Dataset,
    gt: Dataset,
    grid: Sequence[float] | None = None,
    nms_iou: float = 0.7,
) -> ThresholdCurve:
    """Sweep confidence thresholds and report count accuracy at each.

    NMS runs once per record at a fixed IoU threshold; the sweep then
    counts surviving boxes scoring at or above each grid value. The
    returned best threshold breaks ties toward the smallest grid value.
    """
    if grid is None:
        grid = default_grid()
    if not grid:
        raise ValueError("threshold grid must be non-empty")
    grid = sorted(float(t) for t in grid)
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ValueError("grid thresholds must lie in [0, 1]")

    pairs = aligned_records(gt, pred)
    grid_arr = np.asarray(grid, dtype=np.float64)
    hits = np.zeros(len(grid), dtype=np.int64)
    for gt_rec, pred_rec in pairs:
        if pred_rec.boxes is None:
            raise ValueError(f"prediction record {gt_rec.id!r} carries no boxes tier")
        target = annotation_to_count(gt_rec).count
        kept = nms(pred_rec.boxes, nms_iou)
        scores = np.sort(np.asarray([b.score for b in kept], dtype=np.float64))
        counts = len(kept) - np.searchsorted(scores, grid_arr, side="left")
        hits += counts == target
    accuracies = (hits / len(pairs)).tolist()
    return ThresholdCurve.from_sweep(grid, accuracies)


def apply_detector_postprocessing(
    boxes: Sequence[BoundingBox], conf: float, iou_thresh: float
) -> list[BoundingBox]:
    """NMS followed by confidence filtering, the deployment-time pipeline."""
    return confidence_filter(nms(boxes, iou_thresh), conf)


def count_pairs_from_datasets(gt: Dataset, pred: Dataset) -> list[CountPair]:
    """Alignment helper: derive per-image count pairs from two manifests."""
    return [
        CountPair(g.id, annotation_to_count(g).count, annotation_to_count(p).count)
        for g, p in aligned_records(gt, pred)
    ]


def accuracy_at_threshold(pred: Dataset, gt: Dataset, conf: float, nms_iou: float = 0.7) -> float:
    """Count accuracy of box predictions at one confidence threshold."""
    pairs = []
    for gt_rec, pred_rec in aligned_records(gt, pred):
        boxes = apply_detector_postprocessing(pred_rec.boxes or (), conf, nms_iou)
        pairs.append(CountPair(gt_rec.id, annotation_to_count(gt_rec).count, len(boxes)))
    return count_metrics(pairs).accuracy

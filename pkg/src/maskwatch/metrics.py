"""Accuracy, confusion, and average-precision metrics.

AP uses all-point interpolation (area under the precision envelope at a
fixed IoU threshold), not 11-point sampling; the choice shifts results in
the third decimal, so it is fixed here once for the whole package.
Matching is greedy per class: detections are visited in descending
confidence (input order breaks ties) and each claims the not-yet-matched
same-image ground-truth box with the highest IoU at or above the
threshold.  Classes with no ground-truth boxes have no defined AP and are
excluded from the mean rather than counted as zero.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .boxes import BBox, iou
from .detect import Detection
from .errors import ConfigError, InvalidInputError
from .reports import MetricsReport

DEFAULT_IOU_THRESHOLD = 0.5


def classify_metrics(predictions: Sequence[int], labels: Sequence[int],
                     num_classes: int) -> MetricsReport:
    """Confusion matrix (rows = ground truth), per-class and total accuracy.

    Per-class accuracy is the confusion diagonal over the row sum; classes
    with no ground-truth samples get None rather than a fake zero.
    """
    preds = np.asarray(predictions, dtype=np.int64)
    labs = np.asarray(labels, dtype=np.int64)
    if preds.ndim != 1 or labs.ndim != 1 or len(preds) != len(labs):
        raise InvalidInputError(
            f"predictions and labels must be equal-length 1-D sequences, "
            f"got {preds.shape} and {labs.shape}"
        )
    if len(preds) == 0:
        raise InvalidInputError("cannot compute metrics on empty inputs")
    if num_classes < 1:
        raise InvalidInputError(f"num_classes must be >= 1, got {num_classes}")
    for name, ids in (("prediction", preds), ("label", labs)):
        if ids.min() < 0 or ids.max() >= num_classes:
            raise InvalidInputError(
                f"{name} ids must lie in [0, {num_classes}), got range "
                f"[{ids.min()}, {ids.max()}]"
            )

    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (labs, preds), 1)
    row_sums = confusion.sum(axis=1)
    per_class = tuple(
        float(confusion[c, c]) / row_sums[c] if row_sums[c] else None
        for c in range(num_classes)
    )
    return MetricsReport(
        task="classification",
        per_class_accuracy=per_class,
        total_accuracy=float(np.trace(confusion)) / len(labs),
        confusion=confusion,
    )


@dataclass(frozen=True)
class PrCurve:
    """Precision/recall trajectory of confidence-ranked detections."""

    recalls: Tuple[float, ...]
    precisions: Tuple[float, ...]
    num_gt: int

    def __post_init__(self):
        if len(self.recalls) != len(self.precisions):
            raise InvalidInputError("recall and precision lengths differ")
        if any(b < a for a, b in zip(self.recalls, self.recalls[1:])):
            raise InvalidInputError("recalls must be non-decreasing")
        if any(not 0 <= p <= 1 for p in self.precisions):
            raise InvalidInputError("precisions must lie in [0, 1]")


def _check_iou_threshold(iou_threshold: float) -> None:
    if not 0 < iou_threshold < 1:
        raise ConfigError(f"IoU threshold must lie in (0, 1), got {iou_threshold}")


def _match_class(dets: Sequence[Tuple[object, Detection]],
                 gts: Sequence[Tuple[object, BBox]],
                 cls: int, iou_threshold: float):
    """Greedy TP/FP flags for one class; returns (tp, fp, num_gt)."""
    gt_boxes: Dict[object, List[BBox]] = {}
    for image_id, box in gts:
        if box.cls == cls:
            gt_boxes.setdefault(image_id, []).append(box)
    num_gt = sum(len(v) for v in gt_boxes.values())

    cls_dets = [(image_id, det) for image_id, det in dets if det.cls == cls]
    order = sorted(range(len(cls_dets)), key=lambda i: -cls_dets[i][1].conf)
    taken = {image_id: [False] * len(v) for image_id, v in gt_boxes.items()}
    tp = np.zeros(len(cls_dets), dtype=np.float64)
    fp = np.zeros(len(cls_dets), dtype=np.float64)
    for rank, i in enumerate(order):
        image_id, det = cls_dets[i]
        best, best_iou = -1, 0.0
        for j, gt in enumerate(gt_boxes.get(image_id, ())):
            if taken[image_id][j]:
                continue
            overlap = iou(det.box, gt)
            if overlap > best_iou:
                best, best_iou = j, overlap
        if best >= 0 and best_iou >= iou_threshold:
            taken[image_id][best] = True
            tp[rank] = 1.0
        else:
            fp[rank] = 1.0
    return tp, fp, num_gt


def pr_curve(dets, gts, cls: int,
             iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> Optional[PrCurve]:
    """PR points for one class, or None when the class has no ground truth."""
    _check_iou_threshold(iou_threshold)
    tp, fp, num_gt = _match_class(dets, gts, cls, iou_threshold)
    if num_gt == 0:
        return None
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(fp)
    recalls = tp_cum / num_gt
    precisions = tp_cum / np.maximum(tp_cum + fp_cum, np.finfo(np.float64).eps)
    return PrCurve(tuple(recalls.tolist()), tuple(precisions.tolist()), num_gt)


def envelope_area(curve: PrCurve) -> float:
    """Area under the precision envelope over recall (all-point interpolation)."""
    mrec = np.concatenate(([0.0], curve.recalls, [1.0]))
    mpre = np.concatenate(([0.0], curve.precisions, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    changed = np.where(mrec[1:] != mrec[:-1])[0]
    return float(((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]).sum())


def ap_at_iou(dets, gts, cls: int,
              iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> Optional[float]:
    """Average precision for one class; None when it has no ground truth.

    dets: iterable of (image_id, Detection); gts: iterable of (image_id, BBox)
    where each BBox carries its class id.
    """
    curve = pr_curve(dets, gts, cls, iou_threshold)
    if curve is None:
        return None
    return envelope_area(curve)


def map_at_iou(dets, gts, classes: Sequence[int],
               iou_threshold: float = DEFAULT_IOU_THRESHOLD):
    """Per-class AP plus their arithmetic mean over classes with defined AP."""
    if len(classes) == 0:
        raise InvalidInputError("classes must be non-empty")
    ap_per_class = {int(c): ap_at_iou(dets, gts, c, iou_threshold) for c in classes}
    defined = [v for v in ap_per_class.values() if v is not None]
    if not defined:
        raise InvalidInputError(
            "no class has ground-truth boxes; mean AP is undefined"
        )
    return ap_per_class, math.fsum(defined) / len(defined)

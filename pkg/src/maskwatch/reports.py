"""Metrics report container and its on-disk JSON form.

One report type serves both tasks; fields that do not apply to a task are
null.  The file layout is JSON with a fixed key order (task,
per_class_accuracy, total_accuracy, confusion, ap_per_class, map,
inferences_per_sec, hardware, notes) so diffs stay readable.  Reading
re-checks the arithmetic invariants: total accuracy must equal the
confusion-matrix trace over its sum, and map must equal the mean of the
defined per-class AP values.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

REPORT_KEYS = (
    "task",
    "per_class_accuracy",
    "total_accuracy",
    "confusion",
    "ap_per_class",
    "map",
    "inferences_per_sec",
    "hardware",
    "notes",
)
TASKS = ("classification", "detection")
_TOL = 1e-12


@dataclass(eq=False)
class MetricsReport:
    """Evaluation results for one classification or detection run.

    per_class_accuracy uses None for classes absent from the ground truth,
    as does ap_per_class; such classes never contribute to averages.
    """

    task: str
    per_class_accuracy: Optional[Tuple[Optional[float], ...]] = None
    total_accuracy: Optional[float] = None
    confusion: Optional[np.ndarray] = None
    ap_per_class: Optional[Dict[int, Optional[float]]] = None
    map: Optional[float] = None
    inferences_per_sec: Optional[float] = None
    hardware: str = "unspecified"
    notes: str = ""

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.per_class_accuracy is not None:
            self.per_class_accuracy = tuple(self.per_class_accuracy)
        if self.confusion is not None:
            self.confusion = np.asarray(self.confusion, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, MetricsReport):
            return NotImplemented
        for key in REPORT_KEYS:
            a, b = getattr(self, key), getattr(other, key)
            if key == "confusion":
                if (a is None) != (b is None):
                    return False
                if a is not None and not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True


def validate_report(report: MetricsReport) -> None:
    """Enforce the arithmetic invariants; raises ValidationError."""
    if report.confusion is not None:
        conf = report.confusion
        if conf.ndim != 2 or conf.shape[0] != conf.shape[1]:
            raise ValidationError(f"confusion matrix must be square, got shape {conf.shape}")
        if (conf < 0).any():
            raise ValidationError("confusion matrix entries must be non-negative")
        total = int(conf.sum())
        if report.total_accuracy is not None:
            if total == 0:
                raise ValidationError("confusion matrix is all zero but total_accuracy is set")
            expect = np.trace(conf) / total
            if abs(report.total_accuracy - expect) > _TOL:
                raise ValidationError(
                    f"total_accuracy {report.total_accuracy!r} does not equal "
                    f"trace/sum of the confusion matrix ({expect!r})"
                )
    if report.map is not None:
        if report.ap_per_class is None:
            raise ValidationError("map is set but ap_per_class is missing")
        defined = [v for v in report.ap_per_class.values() if v is not None]
        if not defined:
            raise ValidationError("map is set but no class has a defined AP")
        expect = math.fsum(defined) / len(defined)
        if abs(report.map - expect) > _TOL:
            raise ValidationError(
                f"map {report.map!r} does not equal the mean of ap_per_class ({expect!r})"
            )
    if report.inferences_per_sec is not None and report.inferences_per_sec < 0:
        raise ValidationError("inferences_per_sec must be non-negative")


def write_report(report: MetricsReport, path) -> None:
    """Serialize a validated report as stable-key-order JSON."""
    validate_report(report)
    payload = {
        "task": report.task,
        "per_class_accuracy": None
        if report.per_class_accuracy is None
        else list(report.per_class_accuracy),
        "total_accuracy": report.total_accuracy,
        "confusion": None if report.confusion is None else report.confusion.tolist(),
        "ap_per_class": None
        if report.ap_per_class is None
        else {str(k): v for k, v in report.ap_per_class.items()},
        "map": report.map,
        "inferences_per_sec": report.inferences_per_sec,
        "hardware": report.hardware,
        "notes": report.notes,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


def read_report(path) -> MetricsReport:
    """Parse and re-validate a report file written by :func:`write_report`."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc.msg}", path=str(path), line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: report must be a JSON object, got {type(raw).__name__}")
    for key in REPORT_KEYS:
        if key not in raw:
            raise SchemaError(f"{path}: report is missing required key '{key}'")
    unknown = sorted(set(raw) - set(REPORT_KEYS))
    if unknown:
        raise SchemaError(f"{path}: report has unknown keys {unknown}")
    ap = raw["ap_per_class"]
    if ap is not None:
        try:
            ap = {int(k): v for k, v in ap.items()}
        except (AttributeError, ValueError) as exc:
            raise SchemaError(f"{path}: ap_per_class must map class ids to values") from exc
    try:
        report = MetricsReport(
            task=raw["task"],
            per_class_accuracy=None
            if raw["per_class_accuracy"] is None
            else tuple(raw["per_class_accuracy"]),
            total_accuracy=raw["total_accuracy"],
            confusion=None if raw["confusion"] is None else np.asarray(raw["confusion"]),
            ap_per_class=ap,
            map=raw["map"],
            inferences_per_sec=raw["inferences_per_sec"],
            hardware=raw["hardware"],
            notes=raw["notes"],
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed report field: {exc}") from exc
    validate_report(report)
    return report

"""Detection primitives: NMS, single-shot grid decoding, detector backends.

The single-shot decoder follows the YOLO principle: the network divides
the image into an S-by-S grid and each cell regresses B candidate boxes
(cell-relative center offsets, image-relative width/height, an objectness
confidence) plus one class distribution.  A cell's final detection
confidence is objectness times the best class probability, and overlapping
candidates are merged away with greedy non-maximum suppression.

Heavy detector architectures themselves (fine-tuned YOLO variants, face
detectors, ...) are deliberately opaque here: they plug in behind
:class:`DetectorBackend`.
"""

import time
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .boxes import BBox, iou
from .errors import BackendError, ConfigError, InvalidInputError, ParseError


@dataclass(frozen=True)
class Detection:
    """One runtime detection: geometry plus class id and confidence."""

    box: BBox
    cls: int
    conf: float

    def __post_init__(self):
        if not 0.0 <= self.conf <= 1.0:
            raise ValueError(f"Detection.conf must lie in [0, 1], got {self.conf!r}")

    @staticmethod
    def make(cx, cy, w, h, cls, conf) -> "Detection":
        """Build a detection whose box mirrors its class and confidence."""
        return Detection(box=BBox(cx, cy, w, h, cls=cls, conf=conf), cls=cls, conf=conf)


class DetectorBackend:
    """Interface wrapped around any object detector.

    Implementations return detections in normalized coordinates and must
    satisfy the Detection invariants.  ``image_id`` identifies the frame
    (file stem or frame index); model-backed implementations ignore it,
    replay-style ones may key on it.  ``detect`` is assumed serialized
    unless the implementation documents otherwise.
    """

    name = "detector"

    def detect(self, frame: np.ndarray, image_id=None) -> List[Detection]:
        raise NotImplementedError


class ScriptedDetector(DetectorBackend):
    """Backend that replays a fixed per-frame script of detections.

    Frames are identified by an id supplied per call (falling back to call
    order), so the same instance drives image directories, synthetic
    sources, and benchmark harnesses.  An optional artificial per-frame
    delay makes throughput measurements reproducible on any machine.
    """

    def __init__(self, script, name="scripted", delay_ms=0.0):
        # script: dict image_id -> list[Detection], or a plain list applied
        # to every frame.
        self.script = script
        self.name = name
        self.delay_ms = float(delay_ms)
        self._calls = 0

    def detections_for(self, image_id) -> List[Detection]:
        if isinstance(self.script, dict):
            return list(self.script.get(str(image_id), []))
        return list(self.script)

    def detect(self, frame, image_id=None) -> List[Detection]:
        if self.delay_ms > 0:
            time.sleep(self.delay_ms / 1000.0)
        if image_id is None:
            image_id = self._calls
        self._calls += 1
        return self.detections_for(image_id)


class SleepyDetector(DetectorBackend):
    """Benchmark stub: sleeps a fixed time per call and returns nothing."""

    def __init__(self, delay_ms, name="sleepy"):
        self.delay_ms = float(delay_ms)
        self.name = name

    def detect(self, frame, image_id=None) -> List[Detection]:
        time.sleep(self.delay_ms / 1000.0)
        return []


@dataclass
class GridOutput:
    """Activated output of a single-shot grid detector.

    tensor has shape (S, S, B*5 + C); per cell, B tuples
    (tx, ty, tw, th, conf) followed by C class probabilities.  (tx, ty)
    are cell-relative offsets in [0, 1]; (tw, th) are image-relative.
    Activations (sigmoid/softmax) are the producing backend's job, which
    keeps this decoder testable in isolation.
    """

    s: int
    b: int
    c: int
    tensor: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (self.s, self.s, self.b * 5 + self.c)
        t = np.asarray(self.tensor, dtype=np.float64)
        if t.shape != expected:
            raise InvalidInputError(
                f"grid tensor shape {t.shape} does not match S={self.s} "
                f"B={self.b} C={self.c} (expected {expected})"
            )
        self.tensor = t
        confs = t[:, :, 4 : self.b * 5 : 5]
        if np.any(confs < -1e-6) or np.any(confs > 1.0 + 1e-6):
            raise InvalidInputError("grid confidences must lie in [0, 1] after activation")
        probs = t[:, :, self.b * 5 :]
        if np.any(np.abs(probs.sum(axis=-1) - 1.0) > 1e-6):
            raise InvalidInputError("grid class probabilities must sum to 1 per cell")

    def cell(self, i, j):
        return self.tensor[i, j]


def decode_grid(out: GridOutput, conf_threshold: float) -> List[Detection]:
    """Decode an activated grid tensor into detections.

    Cell (i, j), box slot k with offsets (tx, ty) and size (tw, th) maps to
    center ((j + tx)/S, (i + ty)/S).  The detection's class is the argmax
    of the cell's class distribution and its confidence is the box
    confidence times that class probability; candidates are kept when this
    final confidence reaches ``conf_threshold``.  Boxes are clipped to the
    unit image and zero-area boxes are discarded.
    """
    if not 0.0 <= conf_threshold <= 1.0:
        raise ConfigError(f"conf_threshold must lie in [0, 1], got {conf_threshold!r}")
    s, b = out.s, out.b
    probs = out.tensor[:, :, b * 5 :]
    best_cls = np.argmax(probs, axis=-1)
    best_prob = np.take_along_axis(probs, best_cls[:, :, None], axis=-1)[:, :, 0]

    dets: List[Detection] = []
    for i in range(s):
        for j in range(s):
            for k in range(b):
                tx, ty, tw, th, box_conf = out.tensor[i, j, k * 5 : k * 5 + 5]
                conf = float(box_conf * best_prob[i, j])
                if conf < conf_threshold:
                    continue
                cx = (j + tx) / s
                cy = (i + ty) / s
                x0 = max(0.0, cx - tw / 2.0)
                y0 = max(0.0, cy - th / 2.0)
                x1 = min(1.0, cx + tw / 2.0)
                y1 = min(1.0, cy + th / 2.0)
                if x1 <= x0 or y1 <= y0:
                    continue
                cls = int(best_cls[i, j])
                dets.append(
                    Detection(
                        box=BBox.from_corners(x0, y0, x1, y1, cls=cls, conf=conf),
                        cls=cls,
                        conf=conf,
                    )
                )
    return dets


def nms(dets: Sequence[Detection], iou_threshold: float) -> List[Detection]:
    """Greedy class-wise non-maximum suppression.

    Sort by confidence descending (ties broken by input order), repeatedly
    keep the top detection and drop remaining same-class detections whose
    IoU with it exceeds the threshold.  The survivors come back sorted by
    confidence descending.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ConfigError(f"iou_threshold must lie in (0, 1), got {iou_threshold!r}")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].conf)
    kept: List[Detection] = []
    suppressed = [False] * len(dets)
    for pos, i in enumerate(order):
        if suppressed[i]:
            continue
        kept.append(dets[i])
        for j in order[pos + 1 :]:
            if suppressed[j] or dets[j].cls != dets[i].cls:
                continue
            if iou(dets[i].box, dets[j].box) > iou_threshold:
                suppressed[j] = True
    return kept


def detect_frame(
    backend: DetectorBackend,
    frame: np.ndarray,
    conf_threshold: float,
    nms_threshold: float,
    image_id=None,
) -> List[Detection]:
    """Run a backend on one frame, filter by confidence, then apply NMS.

    Backend failures surface as :class:`BackendError` tagged with the
    backend's name.
    """
    try:
        raw = backend.detect(frame, image_id=image_id)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(getattr(backend, "name", "unknown"), str(exc)) from exc
    raw = [d for d in raw if d.conf >= conf_threshold]
    return nms(raw, nms_threshold)


# ---------------------------------------------------------------------------
# Detection interchange files
#
# One line per detection: <image_id> <class_id> <conf> <cx> <cy> <w> <h>.
# This is how externally produced detector outputs enter evaluation without
# running a model.
# ---------------------------------------------------------------------------


def write_detections(path, items: Sequence[Tuple[str, Detection]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, det in items:
            image_id = str(image_id)
            if " " in image_id:
                raise InvalidInputError(f"image_id may not contain spaces: {image_id!r}")
            b = det.box
            fh.write(
                f"{image_id} {det.cls} {det.conf:.6f} "
                f"{b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}\n"
            )


def read_detections(path) -> List[Tuple[str, Detection]]:
    items: List[Tuple[str, Detection]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 7:
                raise ParseError(
                    f"expected 7 fields '<image_id> <class_id> <conf> <cx> <cy> <w> <h>', "
                    f"got {len(fields)}",
                    path=str(path),
                    line=lineno,
                )
            image_id = fields[0]
            try:
                cls = int(fields[1])
                conf, cx, cy, w, h = (float(x) for x in fields[2:])
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from exc
            try:
                items.append((image_id, Detection.make(cx, cy, w, h, cls=cls, conf=conf)))
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from exc
    return items

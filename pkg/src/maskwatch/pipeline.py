"""The two runtime pipelines and their per-frame machinery.

Two competing designs run over the same frames:

* two-stage: a face detector proposes boxes, each box is cropped (with a
  safety margin) and handed to the 3-class mask classifier, one crop at a
  time.  Accurate but pays one classifier pass per face.
* single-shot: one detector pass per frame emits 2-class boxes directly.
  One inference per frame regardless of face count, hence much faster.

Frames are processed strictly one at a time so the latency and FPS
numbers mean what they say for a live camera.
"""

import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from math import ceil, floor
from typing import Mapping, Optional, Tuple, Type

import numpy as np

from .boxes import BBox
from .classes import DET_CLASS_NAMES, MASK_CLASS_NAMES, DetClass, MaskClass
from .cnn import ClassifierBackend, softmax
from .detect import Detection, DetectorBackend, detect_frame
from .errors import BackendError, ConfigError, InvalidInputError, ValidationError
from .imaging import crop_pixels, resize_image


class PipelineMode(str, Enum):
    TWO_STAGE = "two-stage"
    SINGLE_SHOT = "single-shot"


# Box outline colors per class id (works for both class spaces).
DEFAULT_PALETTE: Mapping[int, Tuple[int, int, int]] = {
    0: (0, 200, 0),
    1: (255, 160, 0),
    2: (220, 0, 0),
}


@dataclass(frozen=True)
class PipelineConfig:
    """Settings shared by both pipelines; crop_margin is two-stage only."""

    mode: PipelineMode
    crop_margin: float = 0.2
    classifier_input_side: int = 128
    conf_threshold: float = 0.25
    nms_threshold: float = 0.45
    palette: Mapping[int, Tuple[int, int, int]] = field(
        default_factory=lambda: dict(DEFAULT_PALETTE)
    )

    def __post_init__(self):
        object.__setattr__(self, "mode", PipelineMode(self.mode))
        if self.crop_margin < 0:
            raise ConfigError(f"crop_margin must be >= 0, got {self.crop_margin}")
        if self.classifier_input_side < 1:
            raise ConfigError(
                f"classifier_input_side must be >= 1, got {self.classifier_input_side}"
            )
        for name in ("conf_threshold", "nms_threshold"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")

    @property
    def class_space(self) -> Type:
        return MaskClass if self.mode is PipelineMode.TWO_STAGE else DetClass

    @property
    def class_names(self) -> Mapping[int, str]:
        return MASK_CLASS_NAMES if self.mode is PipelineMode.TWO_STAGE else DET_CLASS_NAMES


@dataclass(frozen=True)
class FrameResult:
    """Detections and wall-clock latency for one processed frame."""

    frame_index: int
    detections: Tuple[Detection, ...]
    latency_ms: float
    class_space: Type

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        if not self.latency_ms > 0:
            raise ValidationError(f"latency_ms must be > 0, got {self.latency_ms}")
        valid = {int(member) for member in self.class_space}
        for det in self.detections:
            if int(det.cls) not in valid:
                raise ValidationError(
                    f"class id {det.cls} is outside the {self.class_space.__name__} space"
                )


class FpsMeter:
    """Rolling frames-per-second estimate over the last ``window`` frames.

    update() ingests a monotonic timestamp and returns
    (k - 1) / (t_last - t_first) over the k <= window retained stamps, or
    None until two stamps exist.
    """

    def __init__(self, window: int = 30):
        if window < 2:
            raise ConfigError(f"window must be >= 2, got {window}")
        self.window = window
        self._stamps = deque(maxlen=window)

    def update(self, now: float) -> Optional[float]:
        if self._stamps and now <= self._stamps[-1]:
            raise InvalidInputError(
                f"timestamps must be strictly increasing: {now} after {self._stamps[-1]}"
            )
        self._stamps.append(float(now))
        if len(self._stamps) < 2:
            return None
        return (len(self._stamps) - 1) / (self._stamps[-1] - self._stamps[0])


def crop_face(frame: np.ndarray, box: BBox, margin: float, out_side: int = 128) -> np.ndarray:
    """Cut out a detected face and resize it for the classifier.

    The box grows by ``margin`` of its size on every side, is clipped to
    the frame, and the clipped region is stretched to out_side square.
    """
    if margin < 0:
        raise ConfigError(f"margin must be >= 0, got {margin}")
    h_px, w_px = frame.shape[:2]
    half_w = box.w * (1 + 2 * margin) / 2.0
    half_h = box.h * (1 + 2 * margin) / 2.0
    x0 = max(floor((box.cx - half_w) * w_px), 0)
    x1 = min(ceil((box.cx + half_w) * w_px), w_px)
    y0 = max(floor((box.cy - half_h) * h_px), 0)
    y1 = min(ceil((box.cy + half_h) * h_px), h_px)
    if x1 <= x0 or y1 <= y0:
        raise InvalidInputError(
            f"box centered ({box.cx}, {box.cy}) does not intersect the {w_px}x{h_px} frame"
        )
    return resize_image(crop_pixels(frame, y0, y1, x0, x1), out_side)


def run_two_stage(frame: np.ndarray, face_detector: DetectorBackend,
                  classifier: ClassifierBackend, cfg: PipelineConfig,
                  frame_index: int = 0) -> FrameResult:
    """Detect faces, then classify each crop into the 3-class mask space.

    The classifier runs once per face; its confidence is the max softmax
    probability.  Zero faces is a valid empty result.
    """
    t0 = time.perf_counter()
    faces = detect_frame(face_detector, frame, cfg.conf_threshold, cfg.nms_threshold,
                         image_id=frame_index)
    final = []
    for face in faces:
        crop = crop_face(frame, face.box, cfg.crop_margin, cfg.classifier_input_side)
        try:
            logits = classifier.predict_logits(crop[None])
        except Exception as exc:
            if isinstance(exc, BackendError):
                raise
            raise BackendError(type(classifier).__name__, str(exc)) from exc
        probs = softmax(logits[0])
        cls = int(np.argmax(probs))
        final.append(
            Detection.make(face.box.cx, face.box.cy, face.box.w, face.box.h,
                           cls=cls, conf=float(probs[cls]))
        )
    latency_ms = max((time.perf_counter() - t0) * 1000.0, 1e-6)
    return FrameResult(frame_index, tuple(final), latency_ms, class_space=MaskClass)


def run_single_shot(frame: np.ndarray, detector: DetectorBackend,
                    cfg: PipelineConfig, frame_index: int = 0) -> FrameResult:
    """One detector pass per frame, emitting 2-class detections directly."""
    t0 = time.perf_counter()
    dets = detect_frame(detector, frame, cfg.conf_threshold, cfg.nms_threshold,
                        image_id=frame_index)
    latency_ms = max((time.perf_counter() - t0) * 1000.0, 1e-6)
    return FrameResult(frame_index, tuple(dets), latency_ms, class_space=DetClass)

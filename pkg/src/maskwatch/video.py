"""Frame sources/sinks, annotation, and the end-to-end video loop.

Sources yield RGB frames in order (None for a frame that failed to
decode, which the loop counts as dropped).  A directory of numbered
images works out of the box; real video containers are read and written
through OpenCV when the optional 'video' extra is installed.
"""

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw

from .errors import BackendError, ConfigError, InvalidInputError, SchemaError, ValidationError
from .imaging import load_image, save_image
from .manifest import IMAGE_EXTENSIONS
from .pipeline import FrameResult, PipelineConfig, PipelineMode, run_single_shot, run_two_stage

logger = logging.getLogger(__name__)

VIDEO_EXTENSIONS = (".mp4", ".avi", ".mov", ".mkv")
SUMMARY_KEYS = (
    "mode",
    "frames",
    "dropped",
    "mean_fps",
    "latency_ms_p50",
    "latency_ms_p95",
    "class_space",
    "notes",
)


def _require_cv2():
    try:
        import cv2
    except ImportError as exc:
        raise BackendError(
            "video-io",
            "opencv-python is not installed; install the 'video' extra to read/write "
            "video containers, or use an image directory instead",
        ) from exc
    return cv2


class ImageDirSource:
    """Frames from a directory of images, ordered by filename."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.is_dir():
            raise InvalidInputError(f"source directory not found: {self.path}")
        self.files = sorted(
            p for p in self.path.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
        )
        if not self.files:
            raise InvalidInputError(f"no image frames in {self.path}")

    def __len__(self):
        return len(self.files)

    def __iter__(self):
        for file in self.files:
            try:
                yield load_image(file)
            except (OSError, ValueError) as exc:
                logger.warning("failed to decode %s: %s", file, exc)
                yield None


class VideoFileSource:
    """Frames from a video container, decoded with OpenCV."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.is_file():
            raise InvalidInputError(f"video file not found: {self.path}")
        self._cv2 = _require_cv2()
        probe = self._cv2.VideoCapture(str(self.path))
        opened = probe.isOpened()
        self.fps = probe.get(self._cv2.CAP_PROP_FPS) or 0.0
        probe.release()
        if not opened:
            raise InvalidInputError(f"could not open video file: {self.path}")

    def __iter__(self):
        capture = self._cv2.VideoCapture(str(self.path))
        try:
            while True:
                ok, frame = capture.read()
                if not ok:
                    break
                yield frame[:, :, ::-1].copy()  # BGR to RGB
        finally:
            capture.release()


class ImageDirSink:
    """Writes annotated frames as numbered PNGs."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.frames_written = 0

    def write(self, frame: np.ndarray) -> None:
        save_image(frame, self.path / f"frame_{self.frames_written:06d}.png")
        self.frames_written += 1

    def close(self) -> None:
        pass


class VideoFileSink:
    """Writes annotated frames into a video container via OpenCV."""

    def __init__(self, path, fps: float = 20.0):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.fps = fps if fps > 0 else 20.0
        self.frames_written = 0
        self._cv2 = _require_cv2()
        self._writer = None

    def write(self, frame: np.ndarray) -> None:
        if self._writer is None:
            fourcc = self._cv2.VideoWriter_fourcc(*"mp4v")
            size = (frame.shape[1], frame.shape[0])
            self._writer = self._cv2.VideoWriter(str(self.path), fourcc, self.fps, size)
            if not self._writer.isOpened():
                raise BackendError("video-io", f"could not open video writer for {self.path}")
        self._writer.write(np.ascontiguousarray(frame[:, :, ::-1]))
        self.frames_written += 1

    def close(self) -> None:
        if self._writer is not None:
            self._writer.release()
            self._writer = None


def make_source(path):
    """Directory of images or a video file, judged by the path."""
    path = Path(path)
    if path.is_dir():
        return ImageDirSource(path)
    if path.suffix.lower() in VIDEO_EXTENSIONS:
        return VideoFileSource(path)
    raise InvalidInputError(
        f"source must be an image directory or a video file ({'/'.join(VIDEO_EXTENSIONS)}), "
        f"got: {path}"
    )


def make_sink(path, fps: float = 20.0):
    path = Path(path)
    if path.suffix.lower() in VIDEO_EXTENSIONS:
        return VideoFileSink(path, fps=fps)
    return ImageDirSink(path)


def annotate_frame(frame: np.ndarray, detections, palette, class_names) -> np.ndarray:
    """Draw class-colored box outlines and confidence text on a copy."""
    img = Image.fromarray(np.ascontiguousarray(frame).astype(np.uint8))
    draw = ImageDraw.Draw(img)
    h_px, w_px = frame.shape[:2]
    for det in detections:
        x0, y0, x1, y1 = det.box.corners()
        px = (x0 * w_px, y0 * h_px, x1 * w_px, y1 * h_px)
        color = tuple(palette.get(int(det.cls), (255, 255, 255)))
        draw.rectangle(px, outline=color, width=2)
        label = f"{class_names.get(int(det.cls), det.cls)} {det.conf:.2f}"
        draw.text((px[0] + 2, max(px[1] - 12, 0)), label, fill=color)
    return np.asarray(img)


@dataclass(frozen=True)
class VideoSummary:
    """End-to-end statistics of one pipeline run over a frame sequence."""

    mode: str
    frames: int
    dropped: int
    mean_fps: float
    latency_ms_p50: Optional[float]
    latency_ms_p95: Optional[float]
    class_space: int
    notes: str = ""

    def __post_init__(self):
        expected = 3 if PipelineMode(self.mode) is PipelineMode.TWO_STAGE else 2
        if self.class_space != expected:
            raise ValidationError(
                f"mode {self.mode!r} implies a {expected}-class space, got {self.class_space}"
            )
        if self.frames < 0 or self.dropped < 0 or self.mean_fps < 0:
            raise ValidationError("frames, dropped, and mean_fps must be non-negative")


def write_video_summary(summary: VideoSummary, path) -> None:
    payload = {key: getattr(summary, key) for key in SUMMARY_KEYS}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


def read_video_summary(path) -> VideoSummary:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: summary must be a JSON object")
    for key in SUMMARY_KEYS:
        if key not in raw:
            raise SchemaError(f"{path}: summary is missing required key '{key}'")
    try:
        return VideoSummary(**{key: raw[key] for key in SUMMARY_KEYS})
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed summary field: {exc}") from exc


def run_video(source, cfg: PipelineConfig, face_detector=None, classifier=None,
              detector=None, sink=None, notes: str = "") -> Tuple[List[FrameResult], VideoSummary]:
    """Run one pipeline over every frame of ``source``.

    Frames are processed in order; a None frame (decode failure) is
    skipped and counted as dropped.  Mean FPS is processed frames divided
    by the wall-clock seconds of the whole loop.  When ``sink`` is given,
    every processed frame is annotated and written, so the sink ends up
    with exactly (yielded - dropped) frames.
    """
    if cfg.mode is PipelineMode.TWO_STAGE:
        if face_detector is None or classifier is None:
            raise ConfigError("two-stage mode needs face_detector and classifier backends")
    elif detector is None:
        raise ConfigError("single-shot mode needs a detector backend")

    results: List[FrameResult] = []
    dropped = 0
    yielded = 0
    t_start = time.perf_counter()
    for index, frame in enumerate(source):
        yielded += 1
        if frame is None:
            dropped += 1
            continue
        if cfg.mode is PipelineMode.TWO_STAGE:
            result = run_two_stage(frame, face_detector, classifier, cfg, frame_index=index)
        else:
            result = run_single_shot(frame, detector, cfg, frame_index=index)
        results.append(result)
        if sink is not None:
            sink.write(annotate_frame(frame, result.detections, cfg.palette, cfg.class_names))
    total_seconds = time.perf_counter() - t_start
    if sink is not None:
        sink.close()
    if yielded == 0:
        raise InvalidInputError("source yielded no frames")

    latencies = [r.latency_ms for r in results]
    summary = VideoSummary(
        mode=cfg.mode.value,
        frames=len(results),
        dropped=dropped,
        mean_fps=len(results) / total_seconds if total_seconds > 0 else 0.0,
        latency_ms_p50=float(np.percentile(latencies, 50)) if latencies else None,
        latency_ms_p95=float(np.percentile(latencies, 95)) if latencies else None,
        class_space=len(cfg.class_space),
        notes=notes,
    )
    return results, summary

"""Synthetic fixtures: tiny datasets and frame sequences built on the fly.

The toy classification task uses three solid-color families (one per
class) with mild per-image jitter.  It is linearly separable, so any
working trainer must reach perfect accuracy on it; this is the standard
probe used by the test suite and the walkthrough scripts.
"""

import time
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .classes import MASK_CLASS_NAMES, MaskClass
from .errors import ConfigError
from .imaging import save_image

# One base RGB color per class; images jitter around these.
CLASS_COLORS: Dict[MaskClass, Tuple[int, int, int]] = {
    MaskClass.CORRECT: (70, 180, 90),
    MaskClass.INCORRECT: (235, 150, 60),
    MaskClass.NONE: (60, 60, 200),
}


def solid_image(color: Tuple[int, int, int], side: int, rng: np.random.Generator,
                jitter: int = 12) -> np.ndarray:
    """A side-square image of one color with small uniform pixel noise."""
    base = np.full((side, side, 3), color, dtype=np.int16)
    noise = rng.integers(-jitter, jitter + 1, size=base.shape, dtype=np.int16)
    return np.clip(base + noise, 0, 255).astype(np.uint8)


def make_solid_dataset(root, per_class: int, side: int = 128,
                       seed: int = 0) -> List[Tuple[Path, MaskClass]]:
    """Write ``per_class`` jittered solid-color PNGs per class under ``root``.

    Files land in the correct/incorrect/none layout that
    build_classification_manifest scans.  Returns (path, label) pairs in
    the order written.
    """
    if per_class < 1:
        raise ConfigError(f"per_class must be >= 1, got {per_class}")
    root = Path(root)
    rng = np.random.default_rng(seed)
    written = []
    for cls in MaskClass:
        class_dir = root / MASK_CLASS_NAMES[cls]
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            path = class_dir / f"{MASK_CLASS_NAMES[cls]}_{i:04d}.png"
            save_image(solid_image(CLASS_COLORS[cls], side, rng), path)
            written.append((path, cls))
    return written


class StubClassifier:
    """Constant-logit classifier for pipeline plumbing experiments.

    Mountable from the command line as
    ``import:maskwatch.synthetic:StubClassifier``; every crop is labeled
    with the argmax of the fixed logits.  ``delay_ms`` simulates per-image
    inference cost.
    """

    def __init__(self, logits=(4.0, 1.0, 0.0), delay_ms: float = 0.0):
        self.logits = tuple(float(v) for v in logits)
        self.delay_ms = float(delay_ms)

    def predict_logits(self, images) -> np.ndarray:
        images = np.asarray(images)
        if self.delay_ms > 0:
            time.sleep(self.delay_ms / 1000.0 * len(images))
        return np.tile(self.logits, (len(images), 1))

    def parameter_count(self) -> int:
        return 0


def make_frame_sequence(directory, num_frames: int, side: int = 256,
                        seed: int = 0) -> List[Path]:
    """Write a numbered-PNG frame sequence with a square sliding across it.

    Gives video pipelines something deterministic to chew on: a gray
    noisy background plus one bright square whose position advances each
    frame.
    """
    if num_frames < 1:
        raise ConfigError(f"num_frames must be >= 1, got {num_frames}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    block = max(side // 5, 4)
    for index in range(num_frames):
        frame = rng.integers(90, 140, size=(side, side, 3), dtype=np.int16)
        span = max(side - block, 1)
        x0 = (index * max(span // max(num_frames - 1, 1), 1)) % span
        y0 = (side - block) // 2
        frame[y0 : y0 + block, x0 : x0 + block] = (250, 220, 90)
        path = directory / f"frame_{index:04d}.png"
        save_image(frame.astype(np.uint8), path)
        paths.append(path)
    return paths

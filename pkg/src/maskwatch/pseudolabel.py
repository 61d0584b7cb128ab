"""Pseudo-labeling: turn a trusted detector's confident outputs into ground truth.

Used to fill under-represented classes: run a detector over unlabeled
images, keep only detections whose confidence strictly exceeds the
threshold, and promote the survivors to ground-truth boxes (confidence
reset to 1.0, class forced to the requested target class).  Images with
no surviving detection are dropped entirely rather than kept as empty
negatives, so unlabeled faces cannot contaminate the set.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Tuple

from .boxes import BBox, validate_bbox
from .detect import DetectorBackend
from .errors import ConfigError
from .imaging import load_image

logger = logging.getLogger(__name__)


def pseudo_label(
    images: Sequence,
    detector: DetectorBackend,
    threshold: float,
    target_class: int,
) -> List[Tuple[str, List[BBox]]]:
    """Generate ground-truth boxes from high-confidence detections.

    Returns (image_path, boxes) pairs for every image that kept at least
    one detection with conf > threshold (strict).  Unreadable images are
    skipped with a logged warning.
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold!r}")
    results: List[Tuple[str, List[BBox]]] = []
    for path in images:
        try:
            frame = load_image(path)
        except Exception as exc:
            logger.warning("skipping unreadable image %s: %s", path, exc)
            continue
        detections = detector.detect(frame, image_id=Path(str(path)).stem)
        boxes = []
        for det in detections:
            if det.conf > threshold:
                box = BBox(
                    det.box.cx,
                    det.box.cy,
                    det.box.w,
                    det.box.h,
                    cls=int(target_class),
                    conf=1.0,
                )
                validate_bbox(box)
                boxes.append(box)
        if boxes:
            results.append((str(path), boxes))
    return results

"""Bounding-box geometry in normalized image coordinates.

Boxes are stored center-format: (cx, cy, w, h), all in [0, 1] relative to
the image, so the same box survives any resize of the underlying pixels.
"""

import logging
import math
from dataclasses import dataclass

logger = logging.getLogger(__name__)

# Boxes may poke out of the unit image by this much (rounding slack).
EDGE_EPS = 1e-6


@dataclass(frozen=True)
class BBox:
    """One normalized box with a class id and a confidence.

    Ground-truth boxes carry conf == 1.0.  Degenerate (zero-area) boxes are
    representable so that downstream code can reject them gracefully, but
    they fail :func:`validate_bbox`.
    """

    cx: float
    cy: float
    w: float
    h: float
    cls: int = 0
    conf: float = 1.0

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "conf"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"BBox.{name} must be finite, got {v!r}")
        if not -EDGE_EPS <= self.conf <= 1.0 + EDGE_EPS:
            raise ValueError(f"BBox.conf must lie in [0, 1], got {self.conf!r}")
        if self.w < 0 or self.h < 0:
            raise ValueError("BBox width/height must be non-negative")
        x0, y0, x1, y1 = self.corners()
        if x0 < -EDGE_EPS or y0 < -EDGE_EPS or x1 > 1.0 + EDGE_EPS or y1 > 1.0 + EDGE_EPS:
            raise ValueError(
                f"box exceeds the unit image: corners={(x0, y0, x1, y1)}"
            )

    def corners(self):
        """(x0, y0, x1, y1) corner coordinates."""
        return (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )

    @property
    def area(self) -> float:
        return self.w * self.h

    @staticmethod
    def from_corners(x0, y0, x1, y1, cls=0, conf=1.0) -> "BBox":
        return BBox(
            cx=(x0 + x1) / 2.0,
            cy=(y0 + y1) / 2.0,
            w=x1 - x0,
            h=y1 - y0,
            cls=cls,
            conf=conf,
        )

    def shifted(self, dx, dy) -> "BBox":
        return BBox(self.cx + dx, self.cy + dy, self.w, self.h, self.cls, self.conf)


def validate_bbox(box: BBox) -> None:
    """Enforce the full box invariants; raises ValueError on violation.

    Requires positive area and containment in the unit image up to
    EDGE_EPS of rounding slack.
    """
    if box.w <= 0 or box.h <= 0:
        raise ValueError(f"box has non-positive area: w={box.w!r} h={box.h!r}")
    x0, y0, x1, y1 = box.corners()
    if x0 < -EDGE_EPS or y0 < -EDGE_EPS or x1 > 1.0 + EDGE_EPS or y1 > 1.0 + EDGE_EPS:
        raise ValueError(f"box exceeds the unit image: corners={(x0, y0, x1, y1)}")


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two normalized boxes, in [0, 1].

    Disjoint boxes give 0.  A zero-area operand gives 0 with a logged
    warning instead of raising, so sloppy upstream detections cannot kill
    an evaluation run.
    """
    ax0, ay0, ax1, ay1 = a.corners()
    bx0, by0, bx1, by1 = b.corners()
    # Areas from corner differences so that iou(x, x) is exactly 1.0: the
    # intersection of a box with itself reproduces the same float product.
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    if area_a <= 0.0 or area_b <= 0.0:
        logger.warning("iou called with zero-area box; returning 0")
        return 0.0
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = area_a + area_b - inter
    return inter / union

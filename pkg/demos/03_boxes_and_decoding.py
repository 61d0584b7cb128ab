"""
Box geometry, non-maximum suppression, and grid decoding
========================================================

Walks the detection plumbing from the bottom up: IoU on hand-checkable
boxes, duplicate removal with NMS, and turning a single-shot detector's
raw grid tensor into image-space detections.
"""

import numpy as np

from maskwatch import BBox, Detection, iou, nms
from maskwatch.detect import GridOutput, decode_grid

# --- IoU -------------------------------------------------------------
# Two equal squares offset by half their width share half their area:
# intersection 0.5 A, union 1.5 A, so IoU is exactly one third.
a = BBox(0.4, 0.5, 0.2, 0.2)
b = BBox(0.5, 0.5, 0.2, 0.2)
print(f"IoU of half-overlapping squares: {iou(a, b):.6f} (expect 0.333333)")
print(f"IoU of a box with itself:        {iou(a, a):.6f} (expect 1.000000)\n")

# --- NMS -------------------------------------------------------------
# Three detections on one face plus one on another: suppression keeps
# the best per cluster and never touches the other class.
dets = [
    Detection.make(0.30, 0.30, 0.20, 0.20, cls=0, conf=0.95),
    Detection.make(0.31, 0.30, 0.20, 0.20, cls=0, conf=0.90),  # duplicate
    Detection.make(0.32, 0.31, 0.20, 0.20, cls=0, conf=0.85),  # duplicate
    Detection.make(0.70, 0.70, 0.20, 0.20, cls=1, conf=0.60),
]
kept = nms(dets, iou_threshold=0.45)
print(f"NMS kept {len(kept)} of {len(dets)} boxes:")
for det in kept:
    print(f"  cls={det.cls} conf={det.conf:.2f} center=({det.box.cx:.2f}, {det.box.cy:.2f})")
print()

# --- Grid decoding ---------------------------------------------------
# A 2x2 grid, one box slot, two classes.  Activate one cell with a
# centered box; (tx, ty) are offsets inside the cell, (tw, th) are
# image-relative sizes.
s, b, c = 2, 1, 2
tensor = np.zeros((s, s, b * 5 + c))
tensor[..., 5:] = 0.5  # uniform class probabilities everywhere
tensor[0, 0, :5] = (0.5, 0.5, 0.30, 0.30, 0.9)  # cell (0, 0), conf 0.9
tensor[0, 0, 5:] = (0.8, 0.2)  # favors class 0
grid = GridOutput(s=s, b=b, c=c, tensor=tensor)

for threshold in (0.25, 0.80):
    decoded = decode_grid(grid, threshold)
    print(f"decode at threshold {threshold}: {len(decoded)} detection(s)")
    for det in decoded:
        print(
            f"  cls={det.cls} conf={det.conf:.2f} "
            f"center=({det.box.cx:.2f}, {det.box.cy:.2f}) "
            f"size=({det.box.w:.2f}, {det.box.h:.2f})"
        )
# The kept detection sits at (0.25, 0.25): cell (0, 0) offset by half a
# cell, with confidence 0.9 * 0.8 = 0.72 after the class probability.

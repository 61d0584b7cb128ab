"""
Scoring detections: precision/recall curves and mean average precision
======================================================================

Builds a small two-class evaluation problem in the plain-text
interchange format, walks through the per-class precision/recall
curves, and writes the standard JSON report with the mAP headline
number.
"""

import argparse
import tempfile
from pathlib import Path

from maskwatch import Detection, map_at_iou, read_report
from maskwatch.detect import read_detections, write_detections
from maskwatch.metrics import pr_curve
from maskwatch.reports import MetricsReport, write_report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", help="where to materialize the demo files")
    args = parser.parse_args()
    root = Path(args.workdir or tempfile.mkdtemp(prefix="maskwatch_demo_"))

    # Ground truth: three masked faces and one bare face over two images.
    gts = [
        ("img_a", Detection.make(0.30, 0.30, 0.20, 0.20, cls=0, conf=1.0)),
        ("img_a", Detection.make(0.70, 0.70, 0.20, 0.20, cls=1, conf=1.0)),
        ("img_b", Detection.make(0.50, 0.50, 0.30, 0.30, cls=0, conf=1.0)),
        ("img_b", Detection.make(0.20, 0.80, 0.15, 0.15, cls=0, conf=1.0)),
    ]
    # Predictions: two clean hits, one slightly shifted hit, one duplicate,
    # one outright miss.
    dets = [
        ("img_a", Detection.make(0.30, 0.30, 0.20, 0.20, cls=0, conf=0.95)),
        ("img_a", Detection.make(0.70, 0.70, 0.20, 0.20, cls=1, conf=0.90)),
        ("img_b", Detection.make(0.52, 0.50, 0.30, 0.30, cls=0, conf=0.85)),
        ("img_b", Detection.make(0.53, 0.51, 0.30, 0.30, cls=0, conf=0.40)),
        ("img_b", Detection.make(0.90, 0.10, 0.10, 0.10, cls=0, conf=0.30)),
    ]
    dets_path, gts_path = root / "dets.txt", root / "gts.txt"
    write_detections(dets_path, dets)
    write_detections(gts_path, gts)
    print(f"interchange files written under {root}\n")

    # Everything downstream reads the files back, as the CLI would.
    dets = read_detections(dets_path)
    gt_boxes = [(image_id, det.box) for image_id, det in read_detections(gts_path)]

    for cls in (0, 1):
        curve = pr_curve(dets, gt_boxes, cls=cls)
        print(f"class {cls}: {curve.num_gt} ground truths")
        for recall, precision in zip(curve.recalls, curve.precisions):
            print(f"  recall={recall:.3f} precision={precision:.3f}")

    ap_per_class, mean_ap = map_at_iou(dets, gt_boxes, classes=[0, 1])
    print("\nper-class AP:", {c: round(ap, 4) for c, ap in ap_per_class.items()})
    print(f"mAP@0.5 = {mean_ap:.4f}")

    report_path = root / "detector_report.json"
    write_report(
        MetricsReport(task="detection", ap_per_class=ap_per_class, map=mean_ap,
                      notes="demo fixture"),
        report_path,
    )
    # Reading re-checks that map equals the mean of the defined APs.
    print(f"report round-trips: map={read_report(report_path).map:.4f} ({report_path})")


if __name__ == "__main__":
    main()

"""
Training the mask classifier, then shrinking it by distillation
===============================================================

Trains a small convolutional classifier from scratch on synthetic data,
then transfers it into a student a quarter of the size using soft
targets.  Prints the per-epoch trace and the final size/accuracy
trade-off that motivates deploying the student.
"""

import argparse
import tempfile
from pathlib import Path

from maskwatch import (
    DistillConfig,
    Split,
    accuracy_score,
    distill,
    load_split_arrays,
    train_classifier,
)
from maskwatch.augment import AugmentationSpec
from maskwatch.cnn import CnnSpec, build_cnn, save_model
from maskwatch.manifest import build_classification_manifest, split_manifest
from maskwatch.synthetic import make_solid_dataset

TEACHER = CnnSpec(conv_blocks=((8, 3, 2), (16, 3, 2)), linear_widths=(32, 3), input_side=32)
STUDENT = CnnSpec(conv_blocks=((4, 3, 2), (8, 3, 2)), linear_widths=(16, 3), input_side=32)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", help="where to materialize the demo files")
    parser.add_argument("--per-class", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    root = Path(args.workdir or tempfile.mkdtemp(prefix="maskwatch_demo_"))

    data_dir = root / "solid_faces"
    make_solid_dataset(data_dir, per_class=args.per_class, side=32, seed=args.seed)
    manifest = split_manifest(
        build_classification_manifest(data_dir).entries, (0.8, 0.1, 0.1), seed=args.seed
    )
    test_images, test_labels = load_split_arrays(manifest, Split.TEST, 32)
    print(f"{len(manifest.entries)} images, {len(test_images)} held out for test\n")

    # Teacher: normalization only, no geometric augmentation needed here.
    augmentation = AugmentationSpec.disabled(output_side=32)
    teacher = build_cnn(TEACHER, seed=args.seed)
    print(f"teacher: {teacher.parameter_count()} parameters")
    report = train_classifier(teacher, manifest, augmentation, epochs=8, lr=0.01,
                              batch_size=8, seed=args.seed)
    for record in report.epochs:
        val = "n/a" if record.val_accuracy is None else f"{record.val_accuracy:.3f}"
        print(f"  epoch {record.epoch}: loss={record.train_loss:.4f} val_acc={val}")
    teacher_acc = accuracy_score(teacher, test_images, test_labels)
    print(f"teacher test accuracy: {teacher_acc:.3f}\n")

    # Student: learns from the teacher's softened outputs plus hard labels.
    student = build_cnn(STUDENT, seed=args.seed + 1, normalization=teacher.normalization)
    print(f"student: {student.parameter_count()} parameters")
    cfg = DistillConfig(temperature=4.0, alpha=0.1, epochs=15, lr=0.005, batch_size=8)
    report = distill(student, teacher, manifest, cfg, seed=args.seed + 1)
    student_acc = accuracy_score(student, test_images, test_labels)
    print(
        f"distilled over {len(report.epochs)} epochs; "
        f"size ratio {report.parameter_ratio:.2%}, "
        f"student test accuracy {student_acc:.3f}"
    )

    save_model(teacher, root / "teacher.npz")
    save_model(student, root / "student.npz")
    print(f"\nmodels saved under {root}")


if __name__ == "__main__":
    main()

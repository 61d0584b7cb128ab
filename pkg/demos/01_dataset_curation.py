"""
Dataset curation: scan, split, augment, pseudo-label
====================================================

Builds a small synthetic dataset of solid-color "face crops", scans it
into a manifest, assigns deterministic train/val/test splits, previews
what the augmentation pipeline does to one image, and finishes by
pseudo-labeling a pool of unlabeled frames with a scripted detector.
"""

import argparse
import tempfile
from pathlib import Path


from maskwatch import Detection, Split, pseudo_label, save_manifest
from maskwatch.augment import AugmentationSpec, augment
from maskwatch.detect import ScriptedDetector
from maskwatch.imaging import load_image
from maskwatch.manifest import build_classification_manifest, split_manifest
from maskwatch.synthetic import make_frame_sequence, make_solid_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", help="where to materialize the demo files")
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    root = Path(args.workdir or tempfile.mkdtemp(prefix="maskwatch_demo_"))
    print(f"working in {root}\n")

    # One directory per class, as a labeling tool would leave them.
    data_dir = root / "solid_faces"
    make_solid_dataset(data_dir, per_class=args.per_class, side=64, seed=args.seed)
    manifest = build_classification_manifest(data_dir)
    print(f"scanned {len(manifest.entries)} labeled images from {data_dir}")

    # 80:10:10 split, reproducible from the seed alone.
    manifest = split_manifest(manifest.entries, (0.8, 0.1, 0.1), seed=args.seed)
    sizes = manifest.split_sizes()
    print(
        f"split sizes: train={sizes[Split.TRAIN]} "
        f"val={sizes[Split.VAL]} test={sizes[Split.TEST]}"
    )
    manifest_path = root / "manifest.jsonl"
    save_manifest(manifest, manifest_path)
    print(f"manifest written to {manifest_path}\n")

    # Augmentation preview: same image, three different draws.
    spec = AugmentationSpec(output_side=64)
    image = load_image(Path(manifest.entries[0].image_path))
    print("augmentation draws on one image (mean pixel after normalize):")
    for draw in range(3):
        out = augment(image, spec, seed=(args.seed, draw))
        print(f"  draw {draw}: shape={out.shape} mean={out.mean():+.4f}")
    print()

    # Pseudo-labeling: a detector's confident boxes become training labels.
    pool = root / "unlabeled"
    make_frame_sequence(pool, 6, side=64, seed=args.seed)
    frames = sorted(pool.iterdir())
    script = {
        p.stem: [Detection.make(0.5, 0.5, 0.4, 0.4, cls=0, conf=0.80 + 0.03 * i)]
        for i, p in enumerate(frames)
    }
    labeled = pseudo_label(frames, ScriptedDetector(script), threshold=0.9, target_class=0)
    print(f"pseudo-labeling kept {len(labeled)} of {len(frames)} frames above conf 0.9")
    for path, boxes in labeled:
        print(f"  {Path(path).name}: {len(boxes)} box(es), conf reset to "
              f"{boxes[0].conf:.1f} as ground truth")


if __name__ == "__main__":
    main()

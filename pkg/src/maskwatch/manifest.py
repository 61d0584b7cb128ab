"""Dataset manifests: ordered samples with split assignments.

A manifest is serialized as line-delimited JSON.  The first line is a
header carrying the split seed; every following line is one sample with
keys ``path``, ``split`` and either ``label`` (classification) or
``boxes`` (detection, a list of [class, cx, cy, w, h] rows).

Per-image box labels also travel as plain text sidecar files, one line
per box, ``<class_id> <cx> <cy> <w> <h>`` with 6-decimal floats, which is
the interchange format fine-tuned external detectors consume.
"""

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .boxes import BBox
from .classes import MaskClass
from .errors import ConfigError, InvalidInputError, ParseError

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class Sample:
    """One manifest entry: an image plus either a class label or boxes."""

    image_path: str
    split: Split
    label: Optional[MaskClass] = None
    boxes: Optional[Tuple[BBox, ...]] = None

    def __post_init__(self):
        if not self.image_path:
            raise InvalidInputError("Sample.image_path must be non-empty")
        if (self.label is None) == (self.boxes is None):
            raise InvalidInputError("Sample needs exactly one of label or boxes")


@dataclass(frozen=True)
class Manifest:
    """Immutable ordered collection of samples plus the split seed."""

    entries: Tuple[Sample, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        paths = [e.image_path for e in self.entries]
        if len(set(paths)) != len(paths):
            dupes = sorted({p for p in paths if paths.count(p) > 1})
            raise InvalidInputError(f"duplicate image paths in manifest: {dupes[:3]}")

    def __len__(self):
        return len(self.entries)

    def subset(self, split: Split) -> Tuple[Sample, ...]:
        return tuple(e for e in self.entries if e.split is split)

    def split_sizes(self) -> dict:
        return {s: len(self.subset(s)) for s in Split}

    def missing_images(self) -> List[str]:
        """Validation warnings: referenced image files that do not exist."""
        return [e.image_path for e in self.entries if not Path(e.image_path).is_file()]


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_manifest(entries: Sequence[Sample], ratios, seed: int) -> Manifest:
    """Assign train/val/test splits by seeded random permutation.

    Split sizes: val and test are round-half-away-from-zero of ratio*N and
    train takes the remainder, so the three always partition the entries.
    The assignment is a pure function of (entry order, seed).
    """
    r_train, r_val, r_test = (float(r) for r in ratios)
    if abs(r_train + r_val + r_test - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {ratios}")
    if min(r_train, r_val, r_test) < 0:
        raise ConfigError(f"split ratios must be non-negative, got {ratios}")
    if not entries:
        raise InvalidInputError("cannot split an empty entry list")

    n = len(entries)
    n_val = _round_half_away(r_val * n)
    n_test = _round_half_away(r_test * n)
    n_train = n - n_val - n_test
    if n_train < 0:
        raise ConfigError(f"ratios {ratios} leave a negative TRAIN size for N={n}")

    perm = np.random.default_rng(seed).permutation(n)
    assignment = {}
    for pos, idx in enumerate(perm):
        if pos < n_train:
            assignment[int(idx)] = Split.TRAIN
        elif pos < n_train + n_val:
            assignment[int(idx)] = Split.VAL
        else:
            assignment[int(idx)] = Split.TEST

    new_entries = tuple(replace(e, split=assignment[i]) for i, e in enumerate(entries))
    return Manifest(entries=new_entries, seed=int(seed))


def save_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"seed": manifest.seed}) + "\n")
        for e in manifest.entries:
            rec = {"path": e.image_path, "split": e.split.value}
            if e.label is not None:
                rec["label"] = int(e.label)
            else:
                rec["boxes"] = [[int(b.cls), b.cx, b.cy, b.w, b.h] for b in e.boxes]
            fh.write(json.dumps(rec) + "\n")


def _parse_entry(rec: dict, path, lineno: int) -> Sample:
    allowed = {"path", "split", "label", "boxes"}
    unknown = set(rec) - allowed
    if unknown:
        raise ParseError(f"unknown manifest key {sorted(unknown)[0]!r}", path=path, line=lineno)
    for key in ("path", "split"):
        if key not in rec:
            raise ParseError(f"missing manifest key {key!r}", path=path, line=lineno)
    if ("label" in rec) == ("boxes" in rec):
        raise ParseError("record needs exactly one of 'label' or 'boxes'", path=path, line=lineno)
    try:
        split = Split(rec["split"])
    except ValueError as exc:
        raise ParseError(f"bad split value {rec['split']!r}", path=path, line=lineno) from exc
    try:
        if "label" in rec:
            return Sample(rec["path"], split, label=MaskClass(rec["label"]))
        boxes = []
        for row in rec["boxes"]:
            if len(row) != 5:
                raise ParseError(
                    f"box row must have 5 numbers [class, cx, cy, w, h], got {len(row)}",
                    path=path,
                    line=lineno,
                )
            cls, cx, cy, w, h = row
            boxes.append(BBox(float(cx), float(cy), float(w), float(h), cls=int(cls)))
        return Sample(rec["path"], split, boxes=tuple(boxes))
    except ParseError:
        raise
    except (TypeError, ValueError, InvalidInputError) as exc:
        raise ParseError(str(exc), path=path, line=lineno) from exc


def load_manifest(path) -> Manifest:
    """Load a manifest; inverse of :func:`save_manifest`.

    An empty file yields an empty manifest with seed 0.  Malformed lines
    raise :class:`ParseError` naming the line.
    """
    entries: List[Sample] = []
    seed = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=str(path), line=lineno) from exc
            if not isinstance(rec, dict):
                raise ParseError("record must be a JSON object", path=str(path), line=lineno)
            if lineno == 1 and "seed" in rec:
                if set(rec) != {"seed"}:
                    raise ParseError("header record may only carry 'seed'", path=str(path), line=lineno)
                seed = int(rec["seed"])
                continue
            entries.append(_parse_entry(rec, str(path), lineno))
    return Manifest(entries=tuple(entries), seed=seed)


# ---------------------------------------------------------------------------
# Per-image box label sidecar files
# ---------------------------------------------------------------------------


def write_box_file(path, boxes: Sequence[BBox]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for b in boxes:
            fh.write(f"{int(b.cls)} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}\n")


def read_box_file(path) -> Tuple[BBox, ...]:
    boxes: List[BBox] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 5:
                raise ParseError(
                    f"expected 5 fields '<class_id> <cx> <cy> <w> <h>', got {len(fields)}",
                    path=str(path),
                    line=lineno,
                )
            try:
                cls = int(fields[0])
                cx, cy, w, h = (float(x) for x in fields[1:])
                boxes.append(BBox(cx, cy, w, h, cls=cls))
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from exc
    return tuple(boxes)


# ---------------------------------------------------------------------------
# Manifest builders
# ---------------------------------------------------------------------------

_CLASS_DIRS = {"correct": MaskClass.CORRECT, "incorrect": MaskClass.INCORRECT, "none": MaskClass.NONE}


def build_classification_manifest(root) -> Manifest:
    """Scan ``root/<class-name>/*.png`` into an unsplit manifest.

    Class directories must be named correct/incorrect/none.  All samples
    start in TRAIN; run :func:`split_manifest` afterwards.
    """
    root = Path(root)
    if not root.is_dir():
        raise InvalidInputError(f"not a directory: {root}")
    entries = []
    for dirname, label in _CLASS_DIRS.items():
        class_dir = root / dirname
        if not class_dir.is_dir():
            continue
        for img in sorted(class_dir.iterdir()):
            if img.suffix.lower() in IMAGE_EXTENSIONS:
                entries.append(Sample(str(img), Split.TRAIN, label=label))
    if not entries:
        raise InvalidInputError(f"no class-labeled images found under {root}")
    return Manifest(entries=tuple(entries))


def build_detection_manifest(images_dir) -> Manifest:
    """Scan a directory of images with YOLO-style ``.txt`` sidecars."""
    images_dir = Path(images_dir)
    if not images_dir.is_dir():
        raise InvalidInputError(f"not a directory: {images_dir}")
    entries = []
    for img in sorted(images_dir.iterdir()):
        if img.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        sidecar = img.with_suffix(".txt")
        if sidecar.is_file():
            entries.append(Sample(str(img), Split.TRAIN, boxes=read_box_file(sidecar)))
    if not entries:
        raise InvalidInputError(f"no annotated images found under {images_dir}")
    return Manifest(entries=tuple(entries))

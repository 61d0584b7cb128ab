"""Shared fixtures: tiny network specs, toy datasets, and a CLI runner."""

import numpy as np
import pytest

from maskwatch import AugmentationSpec, CnnSpec, build_classification_manifest, split_manifest
from maskwatch.cli import main as cli_main
from maskwatch.synthetic import make_solid_dataset

# Side-32 variants of the two-conv/two-linear network keep training tests fast.
SMALL_SIDE = 32
TEACHER_SPEC = CnnSpec(conv_blocks=((8, 3, 2), (16, 3, 2)), linear_widths=(32, 3), input_side=SMALL_SIDE)
STUDENT_SPEC = CnnSpec(conv_blocks=((4, 3, 2), (8, 3, 2)), linear_widths=(16, 3), input_side=SMALL_SIDE)


def small_augmentation(**overrides) -> AugmentationSpec:
    return AugmentationSpec.disabled(output_side=SMALL_SIDE, **overrides)


def solid_manifest(root, per_class, ratios=(0.8, 0.1, 0.1), seed=3):
    """Build a solid-color toy dataset on disk and split it."""
    make_solid_dataset(root, per_class=per_class, side=SMALL_SIDE, seed=11)
    manifest = build_classification_manifest(root)
    return split_manifest(manifest.entries, ratios, seed=seed)


@pytest.fixture
def toy_manifest(tmp_path):
    return solid_manifest(tmp_path / "toy", per_class=12)


def run_cli(argv, capsys):
    """Invoke the CLI in-process, returning (exit_code, stdout, stderr)."""
    code = cli_main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def probe_images():
    rng = np.random.default_rng(99)
    return rng.integers(0, 256, size=(4, SMALL_SIDE, SMALL_SIDE, 3), dtype=np.uint8)

"""Command-line surface: exit codes, config precedence, diagnostics."""


import json

import pytest

from maskwatch import (
    Detection,
    Manifest,
    Sample,
    Split,
    map_at_iou,
    read_report,
    save_manifest,
)
from maskwatch.detect import read_detections, write_detections
from maskwatch.synthetic import make_frame_sequence
from maskwatch.video import read_video_summary
from conftest import run_cli


def labeled_manifest(tmp_path, n=10):
    entries = tuple(
        Sample(f"img_{i:03d}.png", Split.TRAIN, label=i % 3) for i in range(n)
    )
    path = tmp_path / "manifest.jsonl"
    save_manifest(Manifest(entries=entries), path)
    return path


def detection_fixture(tmp_path):
    """Two-class detection files with a mix of hits and misses."""
    gts = [
        ("a", Detection.make(0.30, 0.30, 0.20, 0.20, cls=0, conf=1.0)),
        ("a", Detection.make(0.70, 0.70, 0.20, 0.20, cls=1, conf=1.0)),
        ("b", Detection.make(0.50, 0.50, 0.30, 0.30, cls=0, conf=1.0)),
    ]
    dets = [
        ("a", Detection.make(0.30, 0.30, 0.20, 0.20, cls=0, conf=0.9)),
        ("a", Detection.make(0.70, 0.70, 0.20, 0.20, cls=1, conf=0.8)),
        ("a", Detection.make(0.10, 0.10, 0.10, 0.10, cls=1, conf=0.3)),
        ("b", Detection.make(0.52, 0.50, 0.30, 0.30, cls=0, conf=0.7)),
        ("b", Detection.make(0.90, 0.90, 0.10, 0.10, cls=0, conf=0.2)),
    ]
    dets_path, gts_path = tmp_path / "dets.txt", tmp_path / "gts.txt"
    write_detections(dets_path, dets)
    write_detections(gts_path, gts)
    return dets_path, gts_path


def scripted_source(tmp_path, num_frames=4):
    """Frame directory plus a detection file keyed by frame index."""
    frames = tmp_path / "frames"
    make_frame_sequence(frames, num_frames, side=48, seed=2)
    rows = [
        (str(i), Detection.make(0.5, 0.5, 0.3, 0.3, cls=0, conf=0.9))
        for i in range(num_frames)
    ]
    dets = tmp_path / "frame_dets.txt"
    write_detections(dets, rows)
    return frames, dets


class TestBasics:
    def test_version_exits_zero(self, capsys):
        code, out, _ = run_cli(["--version"], capsys)
        assert code == 0

    def test_help_exits_zero(self, capsys):
        code, out, _ = run_cli(["--help"], capsys)
        assert code == 0
        assert "COMMAND" in out

    def test_subcommand_help_exits_zero(self, capsys):
        for argv in (["run", "--help"], ["dataset", "split", "--help"]):
            code, out, _ = run_cli(argv, capsys)
            assert code == 0

    def test_no_subcommand_is_usage_error(self, capsys):
        code, _, err = run_cli([], capsys)
        assert code == 2
        assert "a subcommand is required" in err

    def test_unknown_subcommand_is_usage_error(self, capsys):
        code, _, err = run_cli(["frobnicate"], capsys)
        assert code == 2


class TestDatasetSplit:
    def test_same_seed_byte_identical(self, tmp_path, capsys):
        manifest = labeled_manifest(tmp_path)
        outs = [tmp_path / "first.jsonl", tmp_path / "second.jsonl"]
        for out in outs:
            code, stdout, _ = run_cli(
                ["dataset", "split", "--manifest", manifest,
                 "--ratios", "0.8,0.1,0.1", "--seed", "7", "--out", out],
                capsys,
            )
            assert code == 0
            assert "8/1/1" in stdout
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_bad_ratios_is_config_error(self, tmp_path, capsys):
        manifest = labeled_manifest(tmp_path)
        code, _, err = run_cli(
            ["dataset", "split", "--manifest", manifest,
             "--ratios", "0.5,0.5", "--out", tmp_path / "out.jsonl"],
            capsys,
        )
        assert code == 2
        assert err.startswith("dataset split:")
        assert err.strip().count("\n") == 0

    def test_missing_manifest_is_runtime_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            ["dataset", "split", "--manifest", tmp_path / "absent.jsonl",
             "--out", tmp_path / "out.jsonl"],
            capsys,
        )
        assert code == 1
        assert err.startswith("dataset split:")


class TestSeedPrecedence:
    def test_env_seed_used_when_no_flag(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MASKWATCH_SEED", "7")
        manifest = labeled_manifest(tmp_path)
        code, out, _ = run_cli(
            ["dataset", "split", "--manifest", manifest, "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 0
        assert "with seed 7" in out

    def test_flag_beats_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MASKWATCH_SEED", "7")
        manifest = labeled_manifest(tmp_path)
        code, out, _ = run_cli(
            ["dataset", "split", "--manifest", manifest, "--seed", "3",
             "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 0
        assert "with seed 3" in out

    def test_default_seed_is_zero(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("MASKWATCH_SEED", raising=False)
        manifest = labeled_manifest(tmp_path)
        code, out, _ = run_cli(
            ["dataset", "split", "--manifest", manifest, "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 0
        assert "with seed 0" in out

    def test_bad_env_seed_is_config_error(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MASKWATCH_SEED", "lucky")
        manifest = labeled_manifest(tmp_path)
        code, _, err = run_cli(
            ["dataset", "split", "--manifest", manifest, "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 2
        assert "MASKWATCH_SEED" in err


class TestEvalDetector:
    def test_report_matches_library_map(self, tmp_path, capsys):
        dets_path, gts_path = detection_fixture(tmp_path)
        report_path = tmp_path / "report.json"
        code, out, _ = run_cli(
            ["eval", "detector", "--dets", dets_path, "--gts", gts_path,
             "--report", report_path],
            capsys,
        )
        assert code == 0
        report = read_report(report_path)
        dets = read_detections(dets_path)
        gts = [(img, d.box) for img, d in read_detections(gts_path)]
        expected_per_class, expected_map = map_at_iou(dets, gts, [0, 1], 0.5)
        assert report.task == "detection"
        assert report.map == pytest.approx(expected_map, abs=1e-12)
        assert report.ap_per_class == expected_per_class
        assert f"{expected_map:.4f}" in out

    def test_empty_gts_rejected(self, tmp_path, capsys):
        dets_path, gts_path = detection_fixture(tmp_path)
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        code, _, err = run_cli(
            ["eval", "detector", "--dets", dets_path, "--gts", empty,
             "--report", tmp_path / "r.json"],
            capsys,
        )
        assert code == 1
        assert err.startswith("eval detector:")


class TestConfigFile:
    def test_empty_config_uses_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "empty.cfg"
        cfg.write_text("# nothing here\n\n")
        manifest = labeled_manifest(tmp_path)
        code, out, _ = run_cli(
            ["--config", cfg, "dataset", "split", "--manifest", manifest,
             "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 0
        assert "8/1/1" in out  # default 0.8,0.1,0.1 ratios

    def test_config_supplies_values(self, tmp_path, capsys):
        cfg = tmp_path / "split.cfg"
        cfg.write_text("ratios = 0.5,0.25,0.25\nseed = 5\n")
        manifest = labeled_manifest(tmp_path, n=8)
        code, out, _ = run_cli(
            ["--config", cfg, "dataset", "split", "--manifest", manifest,
             "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 0
        assert "4/2/2" in out
        assert "with seed 5" in out

    def test_flag_beats_config_value(self, tmp_path, capsys):
        frames, dets = scripted_source(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text("conf = 0.3\n")
        report_path = tmp_path / "summary.json"
        code, _, _ = run_cli(
            ["--config", cfg, "run", "--pipeline", "single-shot",
             "--source", frames, "--detector-backend", f"scripted:{dets}",
             "--conf", "0.25", "--report", report_path],
            capsys,
        )
        assert code == 0
        assert "conf=0.25" in read_video_summary(report_path).notes

    def test_config_value_used_without_flag(self, tmp_path, capsys):
        frames, dets = scripted_source(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text("conf = 0.3\n")
        report_path = tmp_path / "summary.json"
        code, _, _ = run_cli(
            ["--config", cfg, "run", "--pipeline", "single-shot",
             "--source", frames, "--detector-backend", f"scripted:{dets}",
             "--report", report_path],
            capsys,
        )
        assert code == 0
        assert "conf=0.3" in read_video_summary(report_path).notes

    def test_misspelled_key_named_in_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("treshold = 0.9\n")
        manifest = labeled_manifest(tmp_path)
        code, _, err = run_cli(
            ["--config", cfg, "dataset", "split", "--manifest", manifest,
             "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 2
        assert "treshold" in err

    def test_dashed_keys_normalized(self, tmp_path, capsys):
        frames, dets = scripted_source(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text("crop-margin = 0.1\n")
        report_path = tmp_path / "summary.json"
        code, _, _ = run_cli(
            ["--config", cfg, "run", "--pipeline", "two-stage",
             "--source", frames, "--face-backend", f"scripted:{dets}",
             "--classifier-backend", "import:maskwatch.synthetic:StubClassifier",
             "--report", report_path],
            capsys,
        )
        assert code == 0
        assert "crop_margin=0.1" in read_video_summary(report_path).notes

    def test_missing_config_file(self, tmp_path, capsys):
        manifest = labeled_manifest(tmp_path)
        code, _, err = run_cli(
            ["--config", tmp_path / "nope.cfg", "dataset", "split",
             "--manifest", manifest, "--out", tmp_path / "o.jsonl"],
            capsys,
        )
        assert code == 2
        assert "config file not found" in err


class TestRun:
    def test_single_shot_report_and_output(self, tmp_path, capsys):
        frames, dets = scripted_source(tmp_path)
        report_path = tmp_path / "summary.json"
        out_dir = tmp_path / "annotated"
        code, out, _ = run_cli(
            ["run", "--pipeline", "single-shot", "--source", frames,
             "--detector-backend", f"scripted:{dets}",
             "--out", out_dir, "--report", report_path],
            capsys,
        )
        assert code == 0
        summary = read_video_summary(report_path)
        assert summary.frames == 4
        assert summary.class_space == 2
        assert len(list(out_dir.iterdir())) == 4
        assert "single-shot: 4 frames" in out

    def test_two_stage_report(self, tmp_path, capsys):
        frames, dets = scripted_source(tmp_path)
        report_path = tmp_path / "summary.json"
        code, _, _ = run_cli(
            ["run", "--pipeline", "two-stage", "--source", frames,
             "--face-backend", f"scripted:{dets}",
             "--classifier-backend", "import:maskwatch.synthetic:StubClassifier",
             "--report", report_path],
            capsys,
        )
        assert code == 0
        assert read_video_summary(report_path).class_space == 3

    def test_missing_backend_flag_is_config_error(self, tmp_path, capsys):
        frames, _ = scripted_source(tmp_path)
        code, _, err = run_cli(
            ["run", "--pipeline", "single-shot", "--source", frames],
            capsys,
        )
        assert code == 2
        assert err.startswith("run:")
        assert "detector-backend" in err


class TestEvalClassifier:
    def test_missing_model_is_runtime_error(self, tmp_path, capsys):
        manifest = labeled_manifest(tmp_path)
        code, _, err = run_cli(
            ["eval", "classifier", "--model", tmp_path / "absent.npz",
             "--manifest", manifest, "--report", tmp_path / "r.json"],
            capsys,
        )
        assert code == 1
        assert err.startswith("eval classifier:")
        assert err.strip().count("\n") == 0


class TestSpecFile:
    """--spec / --student-spec JSON: defaults fill in, unknown keys named."""

    def write_spec(self, tmp_path, payload):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(payload))
        return path

    def train_args(self, tmp_path, spec_path):
        return [
            "train", "classifier",
            "--manifest", labeled_manifest(tmp_path),
            "--spec", spec_path,
            "--epochs", "1",
            "--out", tmp_path / "m.npz",
        ]

    def test_partial_spec_takes_defaults(self, tmp_path, capsys):
        # manifest images do not exist, so a valid spec fails later with
        # a runtime error (1), never the spec-parse config error (2)
        spec = self.write_spec(
            tmp_path,
            {"conv_blocks": [[4, 3, 2], [8, 3, 2]], "linear_widths": [16, 3]},
        )
        code, _, err = run_cli(self.train_args(tmp_path, spec), capsys)
        assert code == 1
        assert "bad spec file" not in err

    def test_unknown_key_named(self, tmp_path, capsys):
        spec = self.write_spec(tmp_path, {"kernel": 5})
        code, _, err = run_cli(self.train_args(tmp_path, spec), capsys)
        assert code == 2
        assert "kernel" in err
        assert err.strip().count("\n") == 0

    def test_non_object_rejected(self, tmp_path, capsys):
        spec = self.write_spec(tmp_path, [16, 32])
        code, _, err = run_cli(self.train_args(tmp_path, spec), capsys)
        assert code == 2
        assert "JSON object" in err

    def test_invalid_value_is_config_error(self, tmp_path, capsys):
        spec = self.write_spec(tmp_path, {"conv_blocks": [[4, 3, 2]]})
        code, _, err = run_cli(self.train_args(tmp_path, spec), capsys)
        assert code == 2

"""Command-line entry point.

Subcommands: dataset build|split|pseudo-label, train classifier, distill,
eval classifier|detector, bench, run.  Every value flag can also come
from a flat key=value config file (--config); explicit flags win over
file values, and the environment variable MASKWATCH_SEED is the
lowest-precedence seed source before the built-in default of 0.

Exit codes: 0 success, 2 usage/configuration error, 1 runtime failure.
Errors print as one line prefixed with the subcommand name.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import AugmentationSpec
from .backends import resolve_classifier, resolve_detector
from .bench import bench_inference
from .cnn import CnnSpec, build_cnn, load_model, save_model
from .detect import read_detections
from .distill import DistillConfig, distill
from .errors import ConfigError, InvalidInputError, MaskwatchError, ParseError
from .manifest import (
    IMAGE_EXTENSIONS,
    Manifest,
    Sample,
    Split,
    build_classification_manifest,
    build_detection_manifest,
    load_manifest,
    save_manifest,
    split_manifest,
)
from .metrics import classify_metrics, map_at_iou
from .pipeline import PipelineConfig, PipelineMode
from .pseudolabel import pseudo_label
from .reports import MetricsReport, write_report
from .training import load_split_arrays, predict_labels, train_classifier
from .video import make_sink, make_source, run_video, write_video_summary

# Default small student for distillation when no spec file is given.
DEFAULT_STUDENT_SPEC = CnnSpec(conv_blocks=((8, 3, 2), (16, 3, 2)), linear_widths=(64, 3))

DEFAULTS = {
    "task": "classification",
    "ratios": "0.8,0.1,0.1",
    "threshold": 0.9,
    "target_class": 0,
    "epochs": 10,
    "lr": 0.01,
    "batch": 32,
    "no_augment": False,
    "temperature": 4.0,
    "alpha": 0.1,
    "split": "test",
    "iou": 0.5,
    "kind": "classifier",
    "frames": 32,
    "side": 128,
    "warmup": 1,
    "repeats": 5,
    "hardware": "unspecified",
    "conf": 0.25,
    "nms": 0.45,
    "crop_margin": 0.2,
}

# Every key a config file may set; anything else is a hard error.
KNOWN_CONFIG_KEYS = set(DEFAULTS) | {
    "seed", "root", "out", "manifest", "images", "backend", "spec", "teacher",
    "student_spec", "model", "report", "dets", "gts", "pipeline", "source",
    "face_backend", "classifier_backend", "detector_backend",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config(path) -> dict:
    """Read a flat key=value config file; unknown keys are rejected."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", path=str(path), line=lineno)
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in KNOWN_CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}' ({path}:{lineno})")
        values[key] = value.strip()
    return values


def _opt(args, cfg: dict, name: str, cast, default=None):
    """Effective option value: flag, then config file, then default."""
    given = getattr(args, name, None)
    if given is not None:
        return given
    if name in cfg:
        try:
            return cast(cfg[name])
        except ValueError:
            raise ConfigError(
                f"config key '{name}' must be a {cast.__name__}, got {cfg[name]!r}"
            ) from None
    return default


def _require(args, cfg: dict, name: str, cast=str):
    value = _opt(args, cfg, name, cast)
    if value is None:
        raise ConfigError(f"--{name.replace('_', '-')} is required")
    return value


def _seed(args, cfg: dict) -> int:
    value = _opt(args, cfg, "seed", int)
    if value is not None:
        return value
    env = os.environ.get("MASKWATCH_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"MASKWATCH_SEED must be an integer, got {env!r}") from None
    return 0


def _ratios(text: str):
    parts = str(text).split(",")
    if len(parts) != 3:
        raise ConfigError(f"ratios must be three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"ratios must be numbers, got {text!r}") from None


def _notes(label: str, **pairs) -> str:
    """Effective configuration echo embedded in report files."""
    joined = " ".join(f"{k}={v}" for k, v in pairs.items() if v is not None)
    return f"{label} {joined}".strip()


def _load_spec_file(path) -> CnnSpec:
    # user-facing spec JSON: omitted fields take the CnnSpec defaults,
    # unlike model metadata where from_dict stays strict
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"spec file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad spec file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"bad spec file {path}: expected a JSON object")
    defaults = CnnSpec().to_dict()
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"bad spec file {path}: unknown key {unknown[0]!r}")
    try:
        return CnnSpec.from_dict({**defaults, **raw})
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad spec file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_dataset_build(args, cfg):
    task = _opt(args, cfg, "task", str, DEFAULTS["task"])
    root = _require(args, cfg, "root")
    out = _require(args, cfg, "out")
    if task == "classification":
        manifest = build_classification_manifest(root)
    elif task == "detection":
        manifest = build_detection_manifest(root)
    else:
        raise ConfigError(f"task must be classification or detection, got {task!r}")
    save_manifest(manifest, out)
    print(f"wrote {len(manifest.entries)} samples to {out}")
    return 0


def cmd_dataset_split(args, cfg):
    manifest = load_manifest(_require(args, cfg, "manifest"))
    ratios = _ratios(_opt(args, cfg, "ratios", str, DEFAULTS["ratios"]))
    seed = _seed(args, cfg)
    out = _require(args, cfg, "out")
    result = split_manifest(manifest.entries, ratios, seed)
    save_manifest(result, out)
    sizes = result.split_sizes()
    print(
        f"split {len(result.entries)} samples into "
        f"{sizes[Split.TRAIN]}/{sizes[Split.VAL]}/{sizes[Split.TEST]} "
        f"(train/val/test) with seed {seed}"
    )
    return 0


def cmd_dataset_pseudo_label(args, cfg):
    images_dir = Path(_require(args, cfg, "images"))
    if not images_dir.is_dir():
        raise InvalidInputError(f"not a directory: {images_dir}")
    paths = sorted(
        p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
    )
    detector = resolve_detector(_require(args, cfg, "backend"))
    threshold = _opt(args, cfg, "threshold", float, DEFAULTS["threshold"])
    target = _opt(args, cfg, "target_class", int, DEFAULTS["target_class"])
    out = _require(args, cfg, "out")
    labeled = pseudo_label(paths, detector, threshold, target)
    entries = tuple(
        Sample(str(path), Split.TRAIN, boxes=tuple(boxes)) for path, boxes in labeled
    )
    if not entries:
        raise InvalidInputError(
            f"no image passed the {threshold} confidence threshold; nothing to write"
        )
    save_manifest(Manifest(entries=entries), out)
    total = sum(len(boxes) for _, boxes in labeled)
    print(f"pseudo-labeled {len(entries)} of {len(paths)} images ({total} boxes) to {out}")
    return 0


def cmd_train_classifier(args, cfg):
    manifest = load_manifest(_require(args, cfg, "manifest"))
    out = _require(args, cfg, "out")
    seed = _seed(args, cfg)
    epochs = _opt(args, cfg, "epochs", int, DEFAULTS["epochs"])
    lr = _opt(args, cfg, "lr", float, DEFAULTS["lr"])
    batch = _opt(args, cfg, "batch", int, DEFAULTS["batch"])
    spec_path = _opt(args, cfg, "spec", str)
    spec = _load_spec_file(spec_path) if spec_path else CnnSpec()
    no_augment = _opt(args, cfg, "no_augment", _parse_bool, DEFAULTS["no_augment"])
    augmentation = (
        AugmentationSpec.disabled(output_side=spec.input_side)
        if no_augment
        else AugmentationSpec(output_side=spec.input_side)
    )
    net = build_cnn(spec, seed)
    report = train_classifier(net, manifest, augmentation, epochs, lr, batch, seed)
    save_model(net, out)
    final = report.epochs[-1].train_loss if report.epochs else float("nan")
    acc = report.final_val_accuracy
    print(
        f"trained {len(report.epochs)} epochs ({report.parameter_count} parameters); "
        f"final loss {final:.4f}, val accuracy "
        f"{'n/a' if acc is None else f'{acc:.3f}'}; saved to {out}"
    )
    return 0


def cmd_distill(args, cfg):
    teacher = load_model(_require(args, cfg, "teacher"))
    manifest = load_manifest(_require(args, cfg, "manifest"))
    out = _require(args, cfg, "out")
    seed = _seed(args, cfg)
    student_spec_path = _opt(args, cfg, "student_spec", str)
    spec = _load_spec_file(student_spec_path) if student_spec_path else DEFAULT_STUDENT_SPEC
    dcfg = DistillConfig(
        temperature=_opt(args, cfg, "temperature", float, DEFAULTS["temperature"]),
        alpha=_opt(args, cfg, "alpha", float, DEFAULTS["alpha"]),
        epochs=_opt(args, cfg, "epochs", int, DEFAULTS["epochs"]),
        lr=_opt(args, cfg, "lr", float, DEFAULTS["lr"]),
        batch_size=_opt(args, cfg, "batch", int, DEFAULTS["batch"]),
    )
    student = build_cnn(spec, seed, normalization=teacher.normalization)
    report = distill(student, teacher, manifest, dcfg, seed)
    save_model(student, out)
    ratio = report.parameter_ratio
    print(
        f"distilled student ({report.parameter_count} parameters, "
        f"{ratio:.2%} of teacher) over {len(report.epochs)} epochs; saved to {out}"
    )
    return 0


def cmd_eval_classifier(args, cfg):
    net = load_model(_require(args, cfg, "model"))
    manifest = load_manifest(_require(args, cfg, "manifest"))
    split = Split(_opt(args, cfg, "split", str, DEFAULTS["split"]))
    report_path = _require(args, cfg, "report")
    images, labels = load_split_arrays(manifest, split, net.spec.input_side)
    if len(images) == 0:
        raise InvalidInputError(f"manifest has no samples in split '{split.value}'")
    preds = predict_labels(net, images)
    report = classify_metrics(preds, labels, net.spec.num_classes)
    report.hardware = _opt(args, cfg, "hardware", str, DEFAULTS["hardware"])
    report.notes = _notes("eval classifier", split=split.value, samples=len(images))
    write_report(report, report_path)
    print(
        f"total accuracy {report.total_accuracy:.4f} on {len(images)} "
        f"{split.value} samples; report written to {report_path}"
    )
    return 0


def cmd_eval_detector(args, cfg):
    dets = read_detections(_require(args, cfg, "dets"))
    gts = [(image_id, det.box) for image_id, det in read_detections(_require(args, cfg, "gts"))]
    if not gts:
        raise InvalidInputError("ground-truth file contains no boxes")
    iou_thr = _opt(args, cfg, "iou", float, DEFAULTS["iou"])
    report_path = _require(args, cfg, "report")
    classes = sorted({box.cls for _, box in gts})
    ap_per_class, mean_ap = map_at_iou(dets, gts, classes, iou_thr)
    report = MetricsReport(
        task="detection",
        ap_per_class=ap_per_class,
        map=mean_ap,
        hardware=_opt(args, cfg, "hardware", str, DEFAULTS["hardware"]),
        notes=_notes("eval detector", iou=iou_thr, classes=len(classes)),
    )
    write_report(report, report_path)
    per_class = " ".join(
        f"class{c}={'n/a' if ap is None else f'{ap:.4f}'}" for c, ap in ap_per_class.items()
    )
    print(f"mAP@{iou_thr} = {mean_ap:.4f} ({per_class}); report written to {report_path}")
    return 0


def cmd_bench(args, cfg):
    backend_id = _require(args, cfg, "backend")
    kind = _opt(args, cfg, "kind", str, None)
    if kind is None:
        kind = "classifier" if backend_id.startswith(("cnn:",)) else "detector"
    if kind not in ("classifier", "detector"):
        raise ConfigError(f"kind must be classifier or detector, got {kind!r}")
    seed = _seed(args, cfg)
    count = _opt(args, cfg, "frames", int, DEFAULTS["frames"])
    side = _opt(args, cfg, "side", int, DEFAULTS["side"])
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(count, side, side, 3), dtype=np.uint8)
    if kind == "classifier":
        backend = resolve_classifier(backend_id)
        inputs = images
    else:
        backend = resolve_detector(backend_id)
        inputs = list(images)
    result = bench_inference(
        backend,
        inputs,
        warmup=_opt(args, cfg, "warmup", int, DEFAULTS["warmup"]),
        repeats=_opt(args, cfg, "repeats", int, DEFAULTS["repeats"]),
        hardware=_opt(args, cfg, "hardware", str, DEFAULTS["hardware"]),
    )
    report_path = _opt(args, cfg, "report", str)
    if report_path:
        report = MetricsReport(
            task="classification" if kind == "classifier" else "detection",
            inferences_per_sec=result.inferences_per_sec,
            hardware=result.hardware,
            notes=_notes("bench", backend=backend_id, frames=count, side=side,
                         warmup=result.warmup, repeats=result.repeats, seed=seed),
        )
        write_report(report, report_path)
    print(
        f"{result.inferences_per_sec:.2f} inferences/sec "
        f"(median of {result.repeats} passes over {count} inputs)"
    )
    return 0


def cmd_run(args, cfg):
    mode = PipelineMode(_require(args, cfg, "pipeline"))
    source_path = _require(args, cfg, "source")
    conf = _opt(args, cfg, "conf", float, DEFAULTS["conf"])
    nms_thr = _opt(args, cfg, "nms", float, DEFAULTS["nms"])
    margin = _opt(args, cfg, "crop_margin", float, DEFAULTS["crop_margin"])

    face_detector = classifier = detector = None
    if mode is PipelineMode.TWO_STAGE:
        face_detector = resolve_detector(_require(args, cfg, "face_backend"))
        classifier = resolve_classifier(_require(args, cfg, "classifier_backend"))
        side = getattr(getattr(classifier, "spec", None), "input_side", 128)
    else:
        detector = resolve_detector(_require(args, cfg, "detector_backend"))
        side = 128
    pcfg = PipelineConfig(
        mode=mode,
        crop_margin=margin,
        classifier_input_side=side,
        conf_threshold=conf,
        nms_threshold=nms_thr,
    )

    source = make_source(source_path)
    out_path = _opt(args, cfg, "out", str)
    sink = make_sink(out_path, fps=getattr(source, "fps", 20.0) or 20.0) if out_path else None
    notes = _notes("run", pipeline=mode.value, source=source_path, conf=conf,
                   nms=nms_thr, crop_margin=margin if mode is PipelineMode.TWO_STAGE else None)
    results, summary = run_video(
        source, pcfg, face_detector=face_detector, classifier=classifier,
        detector=detector, sink=sink, notes=notes,
    )
    report_path = _opt(args, cfg, "report", str)
    if report_path:
        write_video_summary(summary, report_path)
    total_dets = sum(len(r.detections) for r in results)
    print(
        f"{mode.value}: {summary.frames} frames ({summary.dropped} dropped), "
        f"{total_dets} detections, {summary.mean_fps:.1f} FPS mean"
    )
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def _add_seed(parser):
    parser.add_argument("--seed", type=int, help="random seed (default: MASKWATCH_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskwatch",
        description="Face-mask detection toolkit: dataset curation, training, "
        "distillation, evaluation, and the two-pipeline runtime comparison.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="flat key=value configuration file")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    dataset = commands.add_parser("dataset", help="build, split, and pseudo-label manifests")
    dataset_sub = dataset.add_subparsers(dest="subcommand", metavar="ACTION")

    build = dataset_sub.add_parser("build", help="scan an image tree into a manifest")
    build.add_argument("--root", help="dataset root directory")
    build.add_argument("--task", choices=("classification", "detection"))
    build.add_argument("--out", help="output manifest path")
    build.set_defaults(handler=cmd_dataset_build, label="dataset build")

    split = dataset_sub.add_parser("split", help="assign train/val/test splits")
    split.add_argument("--manifest", help="input manifest path")
    split.add_argument("--ratios", help="train,val,test fractions (default 0.8,0.1,0.1)")
    split.add_argument("--out", help="output manifest path")
    _add_seed(split)
    split.set_defaults(handler=cmd_dataset_split, label="dataset split")

    pseudo = dataset_sub.add_parser(
        "pseudo-label", help="turn confident detections into training boxes"
    )
    pseudo.add_argument("--images", help="directory of unlabeled images")
    pseudo.add_argument("--backend", help="detector backend identifier")
    pseudo.add_argument("--threshold", type=float, help="confidence cut (default 0.9)")
    pseudo.add_argument("--target-class", type=int, dest="target_class",
                        help="class id assigned to kept boxes (default 0)")
    pseudo.add_argument("--out", help="output manifest path")
    pseudo.set_defaults(handler=cmd_dataset_pseudo_label, label="dataset pseudo-label")

    train = commands.add_parser("train", help="fit models")
    train_sub = train.add_subparsers(dest="subcommand", metavar="WHAT")
    train_cls = train_sub.add_parser("classifier", help="train the 3-class mask classifier")
    train_cls.add_argument("--manifest", help="split manifest of labeled images")
    train_cls.add_argument("--spec", help="JSON file describing the network structure")
    train_cls.add_argument("--epochs", type=int)
    train_cls.add_argument("--lr", type=float)
    train_cls.add_argument("--batch", type=int)
    train_cls.add_argument("--no-augment", action="store_const", const=True,
                           dest="no_augment", help="train on normalized images only")
    train_cls.add_argument("--out", help="output model path (.npz)")
    _add_seed(train_cls)
    train_cls.set_defaults(handler=cmd_train_classifier, label="train classifier")

    distill_p = commands.add_parser("distill", help="compress a teacher into a small student")
    distill_p.add_argument("--teacher", help="trained teacher model path")
    distill_p.add_argument("--student-spec", dest="student_spec",
                           help="JSON spec of the student network")
    distill_p.add_argument("--manifest", help="split manifest of labeled images")
    distill_p.add_argument("--temperature", type=float)
    distill_p.add_argument("--alpha", type=float)
    distill_p.add_argument("--epochs", type=int)
    distill_p.add_argument("--lr", type=float)
    distill_p.add_argument("--batch", type=int)
    distill_p.add_argument("--out", help="output student model path")
    _add_seed(distill_p)
    distill_p.set_defaults(handler=cmd_distill, label="distill")

    eval_p = commands.add_parser("eval", help="score models and detection files")
    eval_sub = eval_p.add_subparsers(dest="subcommand", metavar="WHAT")
    eval_cls = eval_sub.add_parser("classifier", help="accuracy/confusion on a manifest split")
    eval_cls.add_argument("--model", help="trained model path")
    eval_cls.add_argument("--manifest", help="split manifest")
    eval_cls.add_argument("--split", choices=tuple(s.value for s in Split))
    eval_cls.add_argument("--hardware", help="hardware descriptor recorded in the report")
    eval_cls.add_argument("--report", help="output report path")
    eval_cls.set_defaults(handler=cmd_eval_classifier, label="eval classifier")

    eval_det = eval_sub.add_parser("detector", help="mAP from detection interchange files")
    eval_det.add_argument("--dets", help="predicted detections file")
    eval_det.add_argument("--gts", help="ground-truth boxes file")
    eval_det.add_argument("--iou", type=float, help="IoU match threshold (default 0.5)")
    eval_det.add_argument("--hardware", help="hardware descriptor recorded in the report")
    eval_det.add_argument("--report", help="output report path")
    eval_det.set_defaults(handler=cmd_eval_detector, label="eval detector")

    bench = commands.add_parser("bench", help="measure inference throughput")
    bench.add_argument("--backend", help="backend identifier to benchmark")
    bench.add_argument("--kind", choices=("classifier", "detector"))
    bench.add_argument("--frames", type=int, help="number of synthetic inputs")
    bench.add_argument("--side", type=int, help="synthetic input side length")
    bench.add_argument("--warmup", type=int)
    bench.add_argument("--repeats", type=int)
    bench.add_argument("--hardware", help="hardware descriptor recorded in the report")
    bench.add_argument("--report", help="optional output report path")
    _add_seed(bench)
    bench.set_defaults(handler=cmd_bench, label="bench")

    run = commands.add_parser("run", help="run a pipeline over a video or image directory")
    run.add_argument("--pipeline", choices=tuple(m.value for m in PipelineMode))
    run.add_argument("--source", help="input video file or image directory")
    run.add_argument("--out", help="annotated output video/directory")
    run.add_argument("--report", help="output summary path")
    run.add_argument("--conf", type=float, help="confidence threshold (default 0.25)")
    run.add_argument("--nms", type=float, help="NMS IoU threshold (default 0.45)")
    run.add_argument("--crop-margin", type=float, dest="crop_margin",
                     help="two-stage face crop margin (default 0.2)")
    run.add_argument("--face-backend", dest="face_backend",
                     help="two-stage face detector identifier")
    run.add_argument("--classifier-backend", dest="classifier_backend",
                     help="two-stage classifier identifier")
    run.add_argument("--detector-backend", dest="detector_backend",
                     help="single-shot detector identifier")
    run.set_defaults(handler=cmd_run, label="run")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "handler", None) is None:
        parser.print_usage(sys.stderr)
        print("maskwatch: a subcommand is required", file=sys.stderr)
        return 2
    label = args.label
    try:
        cfg = load_config(args.config) if args.config else {}
        return args.handler(args, cfg)
    except ConfigError as exc:
        print(f"{label}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except MaskwatchError as exc:
        print(f"{label}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"{label}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

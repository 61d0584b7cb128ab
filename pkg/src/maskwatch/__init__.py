"""maskwatch: a desk-scale face-mask detection toolkit.

Two runtime pipelines over the same video: a two-stage design (face
detector, then a 3-class mask classifier on each crop) and a single-shot
design (one 2-class detector pass per frame).  Around them: dataset
curation with deterministic splits and augmentation, pseudo-labeling,
a trainable numpy CNN with knowledge distillation, detection geometry
(IoU, NMS, grid decoding), mAP/accuracy metrics, and throughput/FPS
measurement.  Everything is seeded and reproducible.
"""

from .errors import (
    BackendError,
    ConfigError,
    InvalidInputError,
    MaskwatchError,
    ModelFormatError,
    ParseError,
    SchemaError,
    TrainingError,
    ValidationError,
)
from .classes import (
    DET_CLASS_NAMES,
    MASK_CLASS_NAMES,
    DetClass,
    MaskClass,
    merge_to_detclass,
)
from .boxes import BBox, iou, validate_bbox
from .detect import (
    Detection,
    DetectorBackend,
    GridOutput,
    ScriptedDetector,
    SleepyDetector,
    decode_grid,
    detect_frame,
    nms,
    read_detections,
    write_detections,
)
from .imaging import load_image, resize_image, rotate_image, save_image
from .augment import AugmentationSpec, augment, normalize_image
from .manifest import (
    Manifest,
    Sample,
    Split,
    build_classification_manifest,
    build_detection_manifest,
    load_manifest,
    read_box_file,
    save_manifest,
    split_manifest,
    write_box_file,
)
from .pseudolabel import pseudo_label
from .cnn import (
    ClassifierBackend,
    CnnSpec,
    NumpyCnn,
    build_cnn,
    load_model,
    log_softmax,
    save_model,
    softmax,
)
from .training import (
    EpochRecord,
    TrainReport,
    accuracy_score,
    cross_entropy,
    load_split_arrays,
    predict_labels,
    train_classifier,
)
from .distill import DistillConfig, distill, distill_loss, distill_loss_grad
from .metrics import (
    PrCurve,
    ap_at_iou,
    classify_metrics,
    envelope_area,
    map_at_iou,
    pr_curve,
)
from .reports import MetricsReport, read_report, validate_report, write_report
from .bench import BenchResult, bench_inference
from .backends import resolve_classifier, resolve_detector
from .pipeline import (
    FpsMeter,
    FrameResult,
    PipelineConfig,
    PipelineMode,
    crop_face,
    run_single_shot,
    run_two_stage,
)
from .video import (
    ImageDirSink,
    ImageDirSource,
    VideoSummary,
    annotate_frame,
    make_sink,
    make_source,
    read_video_summary,
    run_video,
    write_video_summary,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentationSpec",
    "BBox",
    "BackendError",
    "BenchResult",
    "ClassifierBackend",
    "CnnSpec",
    "ConfigError",
    "DET_CLASS_NAMES",
    "DetClass",
    "Detection",
    "DetectorBackend",
    "DistillConfig",
    "EpochRecord",
    "FpsMeter",
    "FrameResult",
    "GridOutput",
    "ImageDirSink",
    "ImageDirSource",
    "InvalidInputError",
    "MASK_CLASS_NAMES",
    "Manifest",
    "MaskClass",
    "MaskwatchError",
    "MetricsReport",
    "ModelFormatError",
    "NumpyCnn",
    "ParseError",
    "PipelineConfig",
    "PipelineMode",
    "PrCurve",
    "Sample",
    "SchemaError",
    "ScriptedDetector",
    "SleepyDetector",
    "Split",
    "TrainReport",
    "TrainingError",
    "ValidationError",
    "VideoSummary",
    "accuracy_score",
    "annotate_frame",
    "ap_at_iou",
    "augment",
    "bench_inference",
    "build_classification_manifest",
    "build_cnn",
    "build_detection_manifest",
    "classify_metrics",
    "crop_face",
    "cross_entropy",
    "decode_grid",
    "detect_frame",
    "distill",
    "distill_loss",
    "distill_loss_grad",
    "envelope_area",
    "iou",
    "load_image",
    "load_manifest",
    "load_model",
    "load_split_arrays",
    "log_softmax",
    "make_sink",
    "make_source",
    "map_at_iou",
    "merge_to_detclass",
    "nms",
    "normalize_image",
    "pr_curve",
    "predict_labels",
    "pseudo_label",
    "read_box_file",
    "read_detections",
    "read_report",
    "read_video_summary",
    "resize_image",
    "resolve_classifier",
    "resolve_detector",
    "rotate_image",
    "run_single_shot",
    "run_two_stage",
    "run_video",
    "save_image",
    "save_manifest",
    "save_model",
    "softmax",
    "split_manifest",
    "train_classifier",
    "validate_bbox",
    "validate_report",
    "write_box_file",
    "write_detections",
    "write_report",
    "write_video_summary",
]

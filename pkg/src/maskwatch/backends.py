"""Backend resolution from identifier strings.

The command-line surface mounts models through compact identifiers:

* ``scripted:DETS.txt`` — replay a detection interchange file, keyed by
  image id (file stem or frame index).  ``?delay_ms=50`` adds a fixed
  artificial delay per frame for reproducible throughput experiments.
* ``cnn:MODEL.npz`` — a trained classifier saved by this package.
* ``import:pkg.module:attr`` — any Python object (or zero-argument
  callable returning one) that satisfies the backend interface; this is
  how externally fine-tuned detectors and pretrained backbones plug in.
"""

from importlib import import_module
from pathlib import Path
from typing import Dict, List, Tuple

from .detect import Detection, DetectorBackend, ScriptedDetector, read_detections
from .cnn import ClassifierBackend, load_model
from .errors import ConfigError


def group_by_image(items: List[Tuple[str, Detection]]) -> Dict[str, List[Detection]]:
    """Group interchange-file rows into a per-image script."""
    script: Dict[str, List[Detection]] = {}
    for image_id, det in items:
        script.setdefault(str(image_id), []).append(det)
    return script


def _resolve_scripted(rest: str) -> ScriptedDetector:
    spec, _, query = rest.partition("?")
    delay_ms = 0.0
    if query:
        for part in query.split("&"):
            key, _, value = part.partition("=")
            if key != "delay_ms":
                raise ConfigError(f"unknown scripted backend option {key!r}")
            try:
                delay_ms = float(value)
            except ValueError:
                raise ConfigError(f"delay_ms must be a number, got {value!r}") from None
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"scripted backend file not found: {path}")
    return ScriptedDetector(
        group_by_image(read_detections(path)),
        name=f"scripted:{path.name}",
        delay_ms=delay_ms,
    )


def _resolve_import(rest: str):
    module_name, _, attr = rest.partition(":")
    if not module_name or not attr:
        raise ConfigError(
            f"import backend must look like 'import:pkg.module:attr', got 'import:{rest}'"
        )
    try:
        obj = getattr(import_module(module_name), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"could not import backend '{rest}': {exc}") from exc
    # Classes and factory functions are called to produce the backend
    # instance; ready-made instances pass through.
    if isinstance(obj, type) or (
        callable(obj) and not hasattr(obj, "detect") and not hasattr(obj, "predict_logits")
    ):
        obj = obj()
    return obj


def resolve_detector(identifier: str) -> DetectorBackend:
    """Instantiate a detector backend from its identifier string."""
    kind, _, rest = str(identifier).partition(":")
    if kind == "scripted":
        return _resolve_scripted(rest)
    if kind == "import":
        backend = _resolve_import(rest)
        if not hasattr(backend, "detect"):
            raise ConfigError(f"imported object for '{identifier}' has no detect method")
        return backend
    raise ConfigError(
        f"unknown detector backend '{identifier}'; expected scripted:FILE or import:module:attr"
    )


def resolve_classifier(identifier: str) -> ClassifierBackend:
    """Instantiate a classifier backend from its identifier string."""
    kind, _, rest = str(identifier).partition(":")
    if kind == "cnn":
        path = Path(rest)
        if not path.is_file():
            raise ConfigError(f"classifier model file not found: {path}")
        return load_model(path)
    if kind == "import":
        backend = _resolve_import(rest)
        if not hasattr(backend, "predict_logits"):
            raise ConfigError(f"imported object for '{identifier}' has no predict_logits method")
        return backend
    raise ConfigError(
        f"unknown classifier backend '{identifier}'; expected cnn:MODEL.npz or import:module:attr"
    )

"""Inference throughput measurement.

A pass runs the backend over every input once; the reported figure is the
median of per-pass rates (inputs / pass seconds), which shrugs off a
single scheduler hiccup that would skew a mean.  Warmup passes run first
and are never timed.  Timing uses the monotonic performance counter and
stays on the calling thread so wall-clock semantics are unambiguous.
"""

import statistics
import time
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ConfigError, InvalidInputError

_CHUNK = 64


@dataclass(frozen=True)
class BenchResult:
    """Median throughput plus the raw per-pass rates behind it."""

    inferences_per_sec: float
    per_pass: Tuple[float, ...]
    num_inputs: int
    warmup: int
    repeats: int
    hardware: str = "unspecified"


def _classifier_pass(backend, images: np.ndarray) -> None:
    for start in range(0, len(images), _CHUNK):
        backend.predict_logits(images[start : start + _CHUNK])


def _detector_pass(backend, frames: Sequence[np.ndarray]) -> None:
    for i, frame in enumerate(frames):
        backend.detect(frame, image_id=i)


def bench_inference(backend, inputs, warmup: int, repeats: int,
                    hardware: str = "unspecified") -> BenchResult:
    """Median inferences/sec of ``backend`` over ``inputs``.

    Classifier backends (predict_logits) see the inputs as image batches;
    detector backends (detect) see one frame at a time.
    """
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    if warmup < 0:
        raise ConfigError(f"warmup must be >= 0, got {warmup}")
    n = len(inputs)
    if n == 0:
        raise InvalidInputError("cannot benchmark on empty inputs")

    if hasattr(backend, "predict_logits"):
        run = _classifier_pass
        inputs = np.asarray(inputs)
    elif hasattr(backend, "detect"):
        run = _detector_pass
    else:
        raise InvalidInputError(
            f"{type(backend).__name__} is neither a classifier nor a detector backend"
        )

    for _ in range(warmup):
        run(backend, inputs)
    rates = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        run(backend, inputs)
        seconds = time.perf_counter() - t0
        if seconds <= 0:
            raise InvalidInputError("timed pass took no measurable time; inputs too small")
        rates.append(n / seconds)
    return BenchResult(
        inferences_per_sec=float(statistics.median(rates)),
        per_pass=tuple(rates),
        num_inputs=n,
        warmup=warmup,
        repeats=repeats,
        hardware=hardware,
    )

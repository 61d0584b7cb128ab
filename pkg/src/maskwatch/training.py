"""Seeded SGD-with-momentum training loop for the numpy classifier.

The loop is deterministic end to end: the shuffle order of every epoch
comes from one generator seeded by the caller, and each sample's
augmentation draws from a generator seeded by (seed, epoch, sample index).
Same seed and data therefore reproduce the same per-epoch losses.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .augment import AugmentationSpec, augment, normalize_image
from .cnn import NumpyCnn, log_softmax, softmax
from .errors import ConfigError, InvalidInputError, TrainingError
from .imaging import load_image, resize_image
from .manifest import Manifest, Split

logger = logging.getLogger(__name__)

DEFAULT_MOMENTUM = 0.9
EVAL_BATCH = 64


@dataclass(frozen=True)
class EpochRecord:
    """One completed epoch: mean train loss, validation accuracy, duration."""

    epoch: int
    train_loss: float
    val_accuracy: Optional[float]
    seconds: float


@dataclass
class TrainReport:
    """Per-epoch training trace plus model size bookkeeping."""

    epochs: List[EpochRecord] = field(default_factory=list)
    parameter_count: int = 0
    teacher_parameter_count: Optional[int] = None

    @property
    def parameter_ratio(self) -> Optional[float]:
        """Student/teacher size ratio; None when no teacher was involved."""
        if not self.teacher_parameter_count:
            return None
        return self.parameter_count / self.teacher_parameter_count

    @property
    def final_val_accuracy(self) -> Optional[float]:
        for record in reversed(self.epochs):
            if record.val_accuracy is not None:
                return record.val_accuracy
        return None


def load_split_arrays(manifest: Manifest, split: Split, side: int) -> Tuple[np.ndarray, np.ndarray]:
    """Load one split's classification samples as (uint8 images, int labels)."""
    samples = manifest.subset(split)
    images = np.zeros((len(samples), side, side, 3), dtype=np.uint8)
    labels = np.zeros(len(samples), dtype=np.int64)
    for i, sample in enumerate(samples):
        if sample.label is None:
            raise InvalidInputError(
                f"{sample.image_path} has no class label; not a classification sample"
            )
        img = load_image(sample.image_path)
        if img.shape[:2] != (side, side):
            img = resize_image(img, side)
        images[i] = img
        labels[i] = int(sample.label)
    return images, labels


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of ``labels`` under softmax(logits)."""
    log_p = log_softmax(logits)
    return float(-log_p[np.arange(len(labels)), labels].mean())


def cross_entropy_grad(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d(mean CE)/d(logits): (softmax - one_hot) / batch."""
    p = softmax(logits)
    p[np.arange(len(labels)), labels] -= 1.0
    return p / len(labels)


def predict_labels(backend, images: np.ndarray, batch_size: int = EVAL_BATCH) -> np.ndarray:
    """Argmax class ids for a stack of images, predicted in chunks."""
    chunks = [
        np.argmax(backend.predict_logits(images[start : start + batch_size]), axis=1)
        for start in range(0, len(images), batch_size)
    ]
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)


def accuracy_score(backend, images: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of images whose argmax logit matches the label."""
    if len(images) == 0:
        raise InvalidInputError("cannot score an empty image batch")
    return float((predict_labels(backend, images) == np.asarray(labels)).mean())


def _augment_batch(images: np.ndarray, spec: AugmentationSpec, seed: int,
                   epoch: int, indices: np.ndarray) -> np.ndarray:
    if spec.is_normalize_only:
        return normalize_image(images, spec.mean, spec.std)
    out = np.empty(images.shape, dtype=np.float64)
    for row, idx in enumerate(indices):
        out[row] = augment(images[row], spec, seed=(seed, epoch, int(idx)))
    return out


class SgdMomentum:
    """v <- momentum * v - lr * grad; param <- param + v."""

    def __init__(self, params: dict, lr: float, momentum: float = DEFAULT_MOMENTUM):
        if lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {lr}")
        if not 0 <= momentum < 1:
            raise ConfigError(f"momentum must lie in [0, 1), got {momentum}")
        self.lr = lr
        self.momentum = momentum
        self.velocity = {k: np.zeros_like(p) for k, p in params.items()}

    def step(self, params: dict, grads: dict) -> None:
        for key, grad in grads.items():
            v = self.velocity[key]
            v *= self.momentum
            v -= self.lr * grad.astype(v.dtype)
            params[key] += v


def _run_epochs(net: NumpyCnn, images, labels, val_images, val_labels,
                augmentation, epochs, batch_size, seed, optimizer,
                loss_and_grad, report: TrainReport) -> TrainReport:
    """Shared epoch loop; loss_and_grad(idx, logits, batch) -> (loss, dlogits)."""
    n = len(images)
    rng = np.random.default_rng(seed)
    for epoch in range(1, epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            batch = _augment_batch(images[idx], augmentation, seed, epoch, idx)
            logits, cache = net.forward(batch.astype(net.dtype))
            loss, dlogits = loss_and_grad(idx, logits, batch)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss!r} at epoch {epoch}, batch starting {start}; "
                    "lower the learning rate or check the input data"
                )
            total_loss += loss * len(idx)
            optimizer.step(net.params, net.backward(cache, dlogits))
        val_acc = None
        if len(val_images):
            val_acc = accuracy_score(net, val_images, val_labels)
        record = EpochRecord(
            epoch=epoch,
            train_loss=total_loss / n,
            val_accuracy=val_acc,
            seconds=time.perf_counter() - t0,
        )
        report.epochs.append(record)
        logger.info(
            "epoch %d/%d loss=%.4f val_acc=%s (%.1fs)",
            epoch, epochs, record.train_loss,
            "n/a" if val_acc is None else f"{val_acc:.3f}", record.seconds,
        )
    return report


def _prepare(net, manifest: Manifest, augmentation: AugmentationSpec):
    if not isinstance(net, NumpyCnn):
        raise InvalidInputError(
            f"this trainer updates NumpyCnn parameters; got {type(net).__name__}"
        )
    side = net.spec.input_side
    if augmentation.output_side != side:
        raise ConfigError(
            f"augmentation output side {augmentation.output_side} does not match "
            f"model input side {side}"
        )
    images, labels = load_split_arrays(manifest, Split.TRAIN, side)
    if len(images) == 0:
        raise InvalidInputError("TRAIN split is empty; nothing to fit")
    if labels.max() >= net.spec.num_classes or labels.min() < 0:
        raise InvalidInputError(
            f"labels must lie in [0, {net.spec.num_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    val_images, val_labels = load_split_arrays(manifest, Split.VAL, side)
    # Inference must preprocess exactly like training did.
    net.normalization = (tuple(augmentation.mean), tuple(augmentation.std))
    return images, labels, val_images, val_labels


def train_classifier(net, manifest: Manifest, augmentation: AugmentationSpec,
                     epochs: int, lr: float, batch_size: int, seed: int,
                     momentum: float = DEFAULT_MOMENTUM) -> TrainReport:
    """Fit the classifier on the manifest's TRAIN split, scoring VAL each epoch.

    Loss is mean cross-entropy between softmaxed logits and the integer
    labels.  epochs=0 returns an empty report and leaves parameters
    untouched; a non-finite loss aborts with a diagnostic.
    """
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch_size}")
    images, labels, val_images, val_labels = _prepare(net, manifest, augmentation)
    report = TrainReport(parameter_count=net.parameter_count())
    optimizer = SgdMomentum(net.params, lr, momentum)

    def loss_and_grad(idx, logits, batch):
        batch_labels = labels[idx]
        return cross_entropy(logits, batch_labels), cross_entropy_grad(logits, batch_labels)

    return _run_epochs(net, images, labels, val_images, val_labels, augmentation,
                       epochs, batch_size, seed, optimizer, loss_and_grad, report)

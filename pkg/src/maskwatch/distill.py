"""Knowledge distillation of a large classifier into a small one.

The student minimizes a blend of the usual hard-label cross-entropy and a
temperature-softened KL divergence toward the frozen teacher:

    loss = alpha * CE(softmax(s), y)
         + (1 - alpha) * T^2 * KL(softmax(t / T) || softmax(s / T))

averaged over the batch.  The T^2 factor keeps the soft-target gradient
magnitude comparable across temperatures.  At alpha=1 the loss reduces
exactly to plain cross-entropy; at alpha=0 with matching logits it is 0.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .augment import AugmentationSpec
from .cnn import ClassifierBackend, NumpyCnn, log_softmax, softmax
from .errors import ConfigError, InvalidInputError
from .manifest import Manifest
from .training import (
    DEFAULT_MOMENTUM,
    SgdMomentum,
    TrainReport,
    _prepare,
    _run_epochs,
    cross_entropy,
    cross_entropy_grad,
)


@dataclass(frozen=True)
class DistillConfig:
    """Distillation hyperparameters; defaults follow common practice."""

    temperature: float = 4.0
    alpha: float = 0.1
    epochs: int = 10
    lr: float = 0.01
    batch_size: int = 32

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")


def _check_batch(student_logits, teacher_logits, hard_labels):
    s = np.atleast_2d(np.asarray(student_logits, dtype=np.float64))
    t = np.atleast_2d(np.asarray(teacher_logits, dtype=np.float64))
    y = np.atleast_1d(np.asarray(hard_labels, dtype=np.int64))
    if s.shape != t.shape or len(s) != len(y):
        raise InvalidInputError(
            f"batch mismatch: student {s.shape}, teacher {t.shape}, labels {y.shape}"
        )
    return s, t, y


def distill_loss(student_logits, teacher_logits, hard_labels, cfg: DistillConfig) -> float:
    """Batch-mean distillation loss; see the module docstring for the formula."""
    s, t, y = _check_batch(student_logits, teacher_logits, hard_labels)
    hard = cross_entropy(s, y)
    if cfg.alpha == 1.0:
        return hard
    temp = cfg.temperature
    p_teacher = softmax(t / temp)
    log_ratio = log_softmax(t / temp) - log_softmax(s / temp)
    kl = float((p_teacher * log_ratio).sum(axis=1).mean())
    return cfg.alpha * hard + (1.0 - cfg.alpha) * temp * temp * kl


def distill_loss_grad(student_logits, teacher_logits, hard_labels, cfg: DistillConfig) -> np.ndarray:
    """d(distill_loss)/d(student_logits), shape (batch, classes)."""
    s, t, y = _check_batch(student_logits, teacher_logits, hard_labels)
    temp = cfg.temperature
    grad = cfg.alpha * len(y) * cross_entropy_grad(s, y)
    if cfg.alpha != 1.0:
        # d/ds of T^2 * KL(p_t || softmax(s/T)) = T * (softmax(s/T) - p_t)
        grad += (1.0 - cfg.alpha) * temp * (softmax(s / temp) - softmax(t / temp))
    return grad / len(y)


def distill(student: NumpyCnn, teacher: ClassifierBackend, manifest: Manifest,
            cfg: DistillConfig, seed: int,
            augmentation: Optional[AugmentationSpec] = None,
            momentum: float = DEFAULT_MOMENTUM) -> TrainReport:
    """Train ``student`` against ``teacher`` soft targets plus hard labels.

    The teacher is never updated; its logits are recomputed per batch on
    the exact pixels the student sees.  With cfg.epochs=0 the student is
    returned untouched.  The report carries both parameter counts so the
    compression ratio is visible.
    """
    if augmentation is None:
        mean, std = student.normalization
        augmentation = AugmentationSpec.disabled(
            mean=mean, std=std, output_side=student.spec.input_side
        )
    images, labels, val_images, val_labels = _prepare(student, manifest, augmentation)
    report = TrainReport(
        parameter_count=student.parameter_count(),
        teacher_parameter_count=teacher.parameter_count(),
    )
    optimizer = SgdMomentum(student.params, cfg.lr, momentum)
    mean = np.asarray(augmentation.mean, dtype=np.float64)
    std = np.asarray(augmentation.std, dtype=np.float64)

    def loss_and_grad(idx, logits, batch):
        # The teacher scores the exact augmented pixels the student saw,
        # de-normalized back to [0, 1] so it applies its own preprocessing.
        teacher_logits = teacher.predict_logits(batch * std + mean)
        batch_labels = labels[idx]
        loss = distill_loss(logits, teacher_logits, batch_labels, cfg)
        return loss, distill_loss_grad(logits, teacher_logits, batch_labels, cfg)

    return _run_epochs(student, images, labels, val_images, val_labels, augmentation,
                       cfg.epochs, cfg.batch_size, seed, optimizer, loss_and_grad, report)

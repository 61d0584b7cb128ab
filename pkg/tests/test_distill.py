"""Knowledge distillation: loss formula, gradients, end-to-end training."""

import numpy as np
import pytest

from conftest import STUDENT_SPEC, TEACHER_SPEC, small_augmentation
from maskwatch import (
    ConfigError,
    DistillConfig,
    InvalidInputError,
    Split,
    accuracy_score,
    build_cnn,
    distill,
    distill_loss,
    distill_loss_grad,
    load_split_arrays,
    train_classifier,
)
from maskwatch.training import cross_entropy


def random_batch(rng, n=6):
    student = rng.normal(scale=2.0, size=(n, 3))
    teacher = rng.normal(scale=2.0, size=(n, 3))
    labels = rng.integers(0, 3, size=n)
    return student, teacher, labels


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"temperature": 0.0},
            {"temperature": -1.0},
            {"alpha": -0.1},
            {"alpha": 1.1},
            {"epochs": -1},
            {"lr": -0.01},
            {"batch_size": 0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            DistillConfig(**kwargs)

    def test_defaults(self):
        cfg = DistillConfig()
        assert cfg.temperature == 4.0
        assert cfg.alpha == 0.1


class TestLoss:
    def test_alpha_one_reduces_to_cross_entropy(self):
        rng = np.random.default_rng(70)
        cfg = DistillConfig(alpha=1.0, temperature=3.0)
        for _ in range(50):
            student, teacher, labels = random_batch(rng)
            soft = distill_loss(student, teacher, labels, cfg)
            hard = cross_entropy(student, labels)
            assert abs(soft - hard) < 1e-9

    def test_alpha_zero_identical_logits_is_zero(self):
        rng = np.random.default_rng(71)
        logits = rng.normal(size=(4, 3))
        labels = np.array([0, 1, 2, 1])
        for temperature in (0.5, 1.0, 4.0):
            cfg = DistillConfig(alpha=0.0, temperature=temperature)
            assert distill_loss(logits, logits.copy(), labels, cfg) == pytest.approx(0.0, abs=1e-12)

    def test_single_example_hand_value(self):
        # alpha=0.5, T=2, student (1,0,0), teacher (0,1,0), label 0.
        # Hard CE = -log(e / (e + 2)); KL(softmax(t/2) || softmax(s/2)) =
        # 0.5*(e^0.5 - 1)/(e^0.5 + 2); loss = 0.5*CE + 0.5*4*KL.
        # Evaluated independently with plain math: 0.45351649978243463.
        cfg = DistillConfig(alpha=0.5, temperature=2.0)
        student = np.array([[1.0, 0.0, 0.0]])
        teacher = np.array([[0.0, 1.0, 0.0]])
        loss = distill_loss(student, teacher, np.array([0]), cfg)
        assert loss == pytest.approx(0.45351649978243463, abs=1e-9)

    def test_loss_non_negative(self):
        rng = np.random.default_rng(72)
        for _ in range(100):
            student, teacher, labels = random_batch(rng)
            cfg = DistillConfig(alpha=float(rng.uniform(0, 1)), temperature=float(rng.uniform(0.5, 8)))
            assert distill_loss(student, teacher, labels, cfg) >= 0.0

    def test_batch_mismatch_rejected(self):
        cfg = DistillConfig()
        with pytest.raises(InvalidInputError):
            distill_loss(np.zeros((3, 3)), np.zeros((2, 3)), np.array([0, 1, 2]), cfg)
        with pytest.raises(InvalidInputError):
            distill_loss(np.zeros((3, 3)), np.zeros((3, 3)), np.array([0, 1]), cfg)


class TestGradient:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(73)
        h = 1e-4
        worst = 0.0
        for _ in range(20):
            student, teacher, labels = random_batch(rng, n=4)
            cfg = DistillConfig(
                alpha=float(rng.uniform(0, 1)), temperature=float(rng.uniform(0.5, 6))
            )
            grad = distill_loss_grad(student, teacher, labels, cfg)
            for i in range(student.shape[0]):
                for j in range(3):
                    up, down = student.copy(), student.copy()
                    up[i, j] += h
                    down[i, j] -= h
                    numeric = (
                        distill_loss(up, teacher, labels, cfg)
                        - distill_loss(down, teacher, labels, cfg)
                    ) / (2 * h)
                    denom = max(abs(numeric), abs(grad[i, j]), 1e-8)
                    worst = max(worst, abs(numeric - grad[i, j]) / denom)
        assert worst < 1e-4

    def test_alpha_one_grad_is_ce_grad(self):
        from maskwatch.training import cross_entropy_grad

        rng = np.random.default_rng(74)
        student, teacher, labels = random_batch(rng)
        cfg = DistillConfig(alpha=1.0)
        np.testing.assert_allclose(
            distill_loss_grad(student, teacher, labels, cfg),
            cross_entropy_grad(student, labels),
            atol=1e-12,
        )


class TestDistillTraining:
    @pytest.fixture
    def trained_teacher(self, toy_manifest):
        teacher = build_cnn(TEACHER_SPEC, seed=0)
        train_classifier(teacher, toy_manifest, small_augmentation(), epochs=10, lr=0.01, batch_size=8, seed=0)
        return teacher

    def test_student_learns_toy_task(self, toy_manifest, trained_teacher):
        images, labels = load_split_arrays(toy_manifest, Split.TEST, side=32)
        assert accuracy_score(trained_teacher, images, labels) == 1.0

        student = build_cnn(STUDENT_SPEC, seed=1)
        cfg = DistillConfig(epochs=20, lr=0.005, batch_size=8)
        report = distill(student, trained_teacher, toy_manifest, cfg, seed=2)
        assert accuracy_score(student, images, labels) == 1.0
        assert report.teacher_parameter_count == trained_teacher.parameter_count()
        assert report.parameter_count == student.parameter_count()
        assert 0.0 < report.parameter_ratio < 1.0

    def test_teacher_immutable(self, toy_manifest, trained_teacher):
        before = trained_teacher.copy_params()
        student = build_cnn(STUDENT_SPEC, seed=3)
        distill(student, trained_teacher, toy_manifest, DistillConfig(epochs=2, lr=0.005, batch_size=8), seed=0)
        for key, value in before.items():
            np.testing.assert_array_equal(trained_teacher.params[key], value)

    def test_zero_epochs_leaves_student_unchanged(self, toy_manifest, trained_teacher):
        student = build_cnn(STUDENT_SPEC, seed=4)
        before = student.copy_params()
        report = distill(student, trained_teacher, toy_manifest, DistillConfig(epochs=0), seed=0)
        assert report.epochs == []
        for key, value in before.items():
            np.testing.assert_array_equal(student.params[key], value)

    def test_determinism(self, toy_manifest, trained_teacher):
        losses = []
        for _ in range(2):
            student = build_cnn(STUDENT_SPEC, seed=5)
            report = distill(
                student, trained_teacher, toy_manifest, DistillConfig(epochs=3, lr=0.005, batch_size=8), seed=6
            )
            losses.append([r.train_loss for r in report.epochs])
        assert all(abs(a - b) < 1e-6 for a, b in zip(*losses))

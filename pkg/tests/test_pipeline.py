"""Per-frame pipeline machinery: cropping, FPS metering, both run modes."""

import numpy as np
import pytest

from maskwatch import (
    BackendError,
    BBox,
    ConfigError,
    Detection,
    FpsMeter,
    FrameResult,
    InvalidInputError,
    PipelineConfig,
    PipelineMode,
    ValidationError,
    crop_face,
    detect_frame,
    run_single_shot,
    run_two_stage,
)
from maskwatch.classes import DetClass, MaskClass
from maskwatch.detect import ScriptedDetector
from maskwatch.imaging import resize_image
from maskwatch.synthetic import StubClassifier


def make_frame(side=100, seed=5):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)


class CountingClassifier:
    """3-class stub that records every crop it is asked to score."""

    name = "counting"

    def __init__(self, logits=(0.0, 5.0, 0.0)):
        self.logits = np.asarray(logits, dtype=np.float64)
        self.crops = []

    def predict_logits(self, images):
        self.crops.append(np.asarray(images[0]).copy())
        return np.tile(self.logits, (len(images), 1))


class TestCropFace:
    def test_whole_frame_margin_zero_is_resize(self):
        frame = make_frame(64)
        crop = crop_face(frame, BBox(0.5, 0.5, 1.0, 1.0), margin=0.0, out_side=32)
        np.testing.assert_array_equal(crop, resize_image(frame, 32))

    def test_hand_computed_margin_bounds(self):
        # Centered box w = h = 0.5 with margin 0.2 grows to 0.5 * 1.4 = 0.7,
        # so on a 100 px frame the region is pixels 15..85 on both axes.
        frame = make_frame(100)
        crop = crop_face(frame, BBox(0.5, 0.5, 0.5, 0.5), margin=0.2, out_side=128)
        np.testing.assert_array_equal(crop, resize_image(frame[15:85, 15:85], 128))
        assert crop.shape == (128, 128, 3)

    def test_near_edge_box_clips_to_frame(self):
        # A corner box whose margin-grown region would start at pixel -2
        # clips to the frame: on 60 px, half extent 0.2 * 1.4 / 2 = 0.14
        # puts the region at pixels 0..15 exactly.
        frame = make_frame(60)
        box = BBox(0.1, 0.1, 0.2, 0.2)
        crop = crop_face(frame, box, margin=0.2, out_side=48)
        assert crop.shape == (48, 48, 3)
        np.testing.assert_array_equal(crop, resize_image(frame[0:15, 0:15], 48))

    def test_zero_extent_box_rejected(self):
        # A degenerate point box lands on an integer pixel boundary and
        # selects no pixels at all.
        frame = make_frame(50)
        with pytest.raises(InvalidInputError):
            crop_face(frame, BBox(0.5, 0.5, 0.0, 0.0), margin=0.0)

    def test_negative_margin_rejected(self):
        with pytest.raises(ConfigError):
            crop_face(make_frame(50), BBox(0.5, 0.5, 0.5, 0.5), margin=-0.1)

    def test_output_side_honored(self):
        crop = crop_face(make_frame(80), BBox(0.5, 0.5, 0.4, 0.6), margin=0.1, out_side=64)
        assert crop.shape == (64, 64, 3)


class TestFpsMeter:
    def test_evenly_spaced_50ms(self):
        meter = FpsMeter()
        estimates = [meter.update(t) for t in (0.0, 0.050, 0.100, 0.150)]
        assert estimates[0] is None
        for est in estimates[1:]:
            assert abs(est - 20.0) < 1e-9

    def test_single_stamp_gives_no_estimate(self):
        assert FpsMeter().update(1.0) is None

    def test_non_monotonic_rejected(self):
        meter = FpsMeter()
        meter.update(0.0)
        with pytest.raises(InvalidInputError):
            meter.update(-0.001)

    def test_equal_stamp_rejected(self):
        meter = FpsMeter()
        meter.update(1.0)
        with pytest.raises(InvalidInputError):
            meter.update(1.0)

    def test_two_stamps_is_reciprocal_gap(self):
        rng = np.random.default_rng(7)
        t = 0.0
        for _ in range(50):
            meter = FpsMeter()
            gap = float(rng.uniform(0.001, 0.5))
            meter.update(t)
            assert abs(meter.update(t + gap) - 1.0 / gap) < 1e-9

    def test_window_evicts_old_stamps(self):
        # window=2 keeps only the latest pair, so the estimate tracks the
        # most recent gap rather than the long-run average.
        meter = FpsMeter(window=2)
        meter.update(0.0)
        meter.update(1.0)
        assert abs(meter.update(1.1) - 10.0) < 1e-9

    def test_window_below_two_rejected(self):
        with pytest.raises(ConfigError):
            FpsMeter(window=1)


class TestPipelineConfig:
    def test_mode_coerced_from_string(self):
        cfg = PipelineConfig(mode="two-stage")
        assert cfg.mode is PipelineMode.TWO_STAGE

    def test_class_space_follows_mode(self):
        assert PipelineConfig(mode="two-stage").class_space is MaskClass
        assert PipelineConfig(mode="single-shot").class_space is DetClass
        assert len(PipelineConfig(mode="two-stage").class_names) == 3
        assert len(PipelineConfig(mode="single-shot").class_names) == 2

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(crop_margin=-0.1),
            dict(classifier_input_side=0),
            dict(conf_threshold=0.0),
            dict(conf_threshold=1.0),
            dict(nms_threshold=1.5),
        ],
    )
    def test_invalid_settings_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            PipelineConfig(mode="two-stage", **kwargs)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            PipelineConfig(mode="three-stage")


class TestFrameResult:
    def test_class_space_enforced(self):
        det = Detection.make(0.5, 0.5, 0.2, 0.2, cls=2, conf=0.9)
        FrameResult(0, (det,), 5.0, class_space=MaskClass)
        with pytest.raises(ValidationError):
            FrameResult(0, (det,), 5.0, class_space=DetClass)

    def test_latency_must_be_positive(self):
        with pytest.raises(ValidationError):
            FrameResult(0, (), 0.0, class_space=MaskClass)


class TestRunTwoStage:
    CFG = PipelineConfig(mode="two-stage", classifier_input_side=32)

    def test_zero_faces_is_empty_result(self):
        detector = ScriptedDetector({})
        result = run_two_stage(make_frame(), detector, StubClassifier(), self.CFG)
        assert result.detections == ()
        assert result.class_space is MaskClass
        assert result.latency_ms > 0

    def test_single_face_takes_classifier_verdict(self):
        face = Detection.make(0.5, 0.5, 0.4, 0.4, cls=0, conf=0.9)
        detector = ScriptedDetector([face])
        classifier = CountingClassifier(logits=(0.0, 6.0, 0.0))  # favors INCORRECT
        result = run_two_stage(make_frame(), detector, classifier, self.CFG)
        assert len(result.detections) == 1
        out = result.detections[0]
        assert out.cls == int(MaskClass.INCORRECT)
        assert out.box.cx == face.box.cx and out.box.w == face.box.w
        assert 0.5 < out.conf <= 1.0

    def test_classifier_called_once_per_face_in_order(self):
        left = Detection.make(0.25, 0.5, 0.3, 0.3, cls=0, conf=0.95)
        right = Detection.make(0.75, 0.5, 0.3, 0.3, cls=0, conf=0.90)
        detector = ScriptedDetector([left, right])
        classifier = CountingClassifier()
        frame = make_frame()
        result = run_two_stage(frame, detector, classifier, self.CFG)
        assert len(classifier.crops) == 2
        expected_first = crop_face(frame, left.box, self.CFG.crop_margin, 32)
        expected_second = crop_face(frame, right.box, self.CFG.crop_margin, 32)
        np.testing.assert_array_equal(classifier.crops[0], expected_first)
        np.testing.assert_array_equal(classifier.crops[1], expected_second)
        assert [d.box.cx for d in result.detections] == [0.25, 0.75]

    def test_classifier_failure_tagged_with_backend(self):
        class Broken:
            name = "broken"

            def predict_logits(self, images):
                raise RuntimeError("weights corrupted")

        face = Detection.make(0.5, 0.5, 0.4, 0.4, cls=0, conf=0.9)
        with pytest.raises(BackendError, match="weights corrupted"):
            run_two_stage(make_frame(), ScriptedDetector([face]), Broken(), self.CFG)

    def test_frame_left_unchanged(self):
        frame = make_frame()
        before = frame.copy()
        face = Detection.make(0.5, 0.5, 0.4, 0.4, cls=0, conf=0.9)
        run_two_stage(frame, ScriptedDetector([face]), StubClassifier(), self.CFG)
        np.testing.assert_array_equal(frame, before)


class TestRunSingleShot:
    CFG = PipelineConfig(mode="single-shot")

    def script(self):
        return [
            Detection.make(0.3, 0.3, 0.2, 0.2, cls=0, conf=0.9),
            Detection.make(0.31, 0.3, 0.2, 0.2, cls=0, conf=0.8),  # suppressed
            Detection.make(0.7, 0.7, 0.2, 0.2, cls=1, conf=0.85),
        ]

    def test_matches_direct_detect_frame(self):
        frame = make_frame()
        result = run_single_shot(frame, ScriptedDetector(self.script()), self.CFG)
        expected = detect_frame(
            ScriptedDetector(self.script()), frame, self.CFG.conf_threshold,
            self.CFG.nms_threshold, image_id=0,
        )
        assert list(result.detections) == expected
        assert result.class_space is DetClass

    def test_deterministic_across_runs(self):
        frame = make_frame()
        first = run_single_shot(frame, ScriptedDetector(self.script()), self.CFG)
        second = run_single_shot(frame, ScriptedDetector(self.script()), self.CFG)
        assert first.detections == second.detections

    def test_frame_left_unchanged(self):
        frame = make_frame()
        before = frame.copy()
        run_single_shot(frame, ScriptedDetector(self.script()), self.CFG)
        np.testing.assert_array_equal(frame, before)

"""Label enumerations and the 3-class to 2-class merge."""

import pytest

from maskwatch import (
    DET_CLASS_NAMES,
    MASK_CLASS_NAMES,
    DetClass,
    MaskClass,
    merge_to_detclass,
)


def test_mask_class_values():
    assert [c.value for c in MaskClass] == [0, 1, 2]
    assert MASK_CLASS_NAMES[MaskClass.CORRECT] == "correct"
    assert MASK_CLASS_NAMES[MaskClass.INCORRECT] == "incorrect"
    assert MASK_CLASS_NAMES[MaskClass.NONE] == "none"


def test_det_class_values():
    assert [c.value for c in DetClass] == [0, 1]
    assert DET_CLASS_NAMES[DetClass.POSITIVE] == "positive"
    assert DET_CLASS_NAMES[DetClass.NEGATIVE] == "negative"


def test_merge_mapping():
    assert merge_to_detclass(MaskClass.CORRECT) is DetClass.POSITIVE
    assert merge_to_detclass(MaskClass.INCORRECT) is DetClass.NEGATIVE
    assert merge_to_detclass(MaskClass.NONE) is DetClass.NEGATIVE


def test_merge_total_and_surjective():
    image = {merge_to_detclass(c) for c in MaskClass}
    assert image == set(DetClass)
    negatives = [c for c in MaskClass if merge_to_detclass(c) is DetClass.NEGATIVE]
    assert len(negatives) == 2


def test_merge_accepts_plain_ints():
    assert merge_to_detclass(0) is DetClass.POSITIVE
    assert merge_to_detclass(2) is DetClass.NEGATIVE


def test_merge_rejects_unknown():
    with pytest.raises(ValueError):
        merge_to_detclass(3)

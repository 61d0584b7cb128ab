"""Class vocabularies for the two tasks.

The classifier works in a 3-class space (mask correctly worn, mask
incorrectly worn, no mask).  The detector works in a 2-class space where
"positive" means a correctly worn mask and everything else is "negative".
"""

from enum import IntEnum


class MaskClass(IntEnum):
    """3-class label space for the mask-wearing classifier."""

    CORRECT = 0
    INCORRECT = 1
    NONE = 2


class DetClass(IntEnum):
    """2-class label space for the single-shot detector."""

    POSITIVE = 0
    NEGATIVE = 1


MASK_CLASS_NAMES = {
    MaskClass.CORRECT: "correct",
    MaskClass.INCORRECT: "incorrect",
    MaskClass.NONE: "none",
}

DET_CLASS_NAMES = {
    DetClass.POSITIVE: "positive",
    DetClass.NEGATIVE: "negative",
}


def merge_to_detclass(label: MaskClass) -> DetClass:
    """Collapse the 3-class space onto the detector's 2-class space.

    Correctly worn masks are positive; incorrectly worn and absent masks
    are both negative.
    """
    label = MaskClass(label)
    if label is MaskClass.CORRECT:
        return DetClass.POSITIVE
    return DetClass.NEGATIVE

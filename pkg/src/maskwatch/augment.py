"""Training-time augmentation pipeline.

Images are normalized first and then pushed through color jitter, random
rotation, random resized crop, Gaussian blur, and random erasing, in that
fixed order.  Every step is driven by one seeded generator, so a given
(spec, seed) pair always produces the same output.  Augmentation is meant
for TRAIN samples only; validation and test images get the normalization
step alone (see :meth:`AugmentationSpec.disabled`).

Because jitter runs on normalized (mean-subtracted) data, hue is shifted
with a linear rotation about the gray axis of RGB space rather than an
HSV round-trip, which would be ill-defined for out-of-gamut values.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, InvalidInputError
from .imaging import gaussian_blur, resize_image, rotate_image, to_float

DEFAULT_MEAN = (0.5, 0.5, 0.5)
DEFAULT_STD = (0.5, 0.5, 0.5)


@dataclass(frozen=True)
class AugmentationSpec:
    """Parameters for the full augmentation pipeline.

    Zero / None values disable the corresponding transform.  ``output_side``
    must equal the classifier's input side.
    """

    brightness: float = 0.2
    contrast: float = 0.2
    saturation: float = 0.2
    hue: float = 0.2
    rotation_degrees: float = 15.0
    crop_scale: Optional[Tuple[float, float]] = (0.8, 1.0)
    blur_kernel: Optional[int] = 5
    blur_sigma: Tuple[float, float] = (0.1, 2.0)
    erasing_p: float = 0.25
    erasing_area: Tuple[float, float] = (0.02, 0.2)
    mean: Tuple[float, float, float] = DEFAULT_MEAN
    std: Tuple[float, float, float] = DEFAULT_STD
    output_side: int = 128

    def __post_init__(self):
        for name in ("brightness", "contrast", "saturation", "hue"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} jitter must be >= 0")
        if self.rotation_degrees < 0:
            raise ConfigError("rotation_degrees must be >= 0")
        if self.crop_scale is not None:
            lo, hi = self.crop_scale
            if not 0 < lo <= hi <= 1:
                raise ConfigError(f"crop_scale must satisfy 0 < lo <= hi <= 1, got {self.crop_scale}")
        if self.blur_kernel is not None:
            if self.blur_kernel < 1 or self.blur_kernel % 2 == 0:
                raise ConfigError("blur_kernel must be a positive odd integer")
            lo, hi = self.blur_sigma
            if not 0 < lo <= hi:
                raise ConfigError(f"blur_sigma must satisfy 0 < lo <= hi, got {self.blur_sigma}")
        if not 0 <= self.erasing_p <= 1:
            raise ConfigError("erasing_p must lie in [0, 1]")
        lo, hi = self.erasing_area
        if not 0 < lo <= hi <= 1:
            raise ConfigError(f"erasing_area must satisfy 0 < lo <= hi <= 1, got {self.erasing_area}")
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ConfigError("mean/std must have three channels")
        if any(s == 0 for s in self.std):
            raise ConfigError("std entries must be non-zero")
        if self.output_side < 1:
            raise ConfigError("output_side must be >= 1")

    @property
    def is_normalize_only(self) -> bool:
        """True when every random transform is disabled (seed is irrelevant)."""
        return (
            self.brightness == 0
            and self.contrast == 0
            and self.saturation == 0
            and self.hue == 0
            and self.rotation_degrees == 0
            and self.crop_scale is None
            and self.blur_kernel is None
            and self.erasing_p == 0
        )

    @staticmethod
    def disabled(mean=DEFAULT_MEAN, std=DEFAULT_STD, output_side=128) -> "AugmentationSpec":
        """Normalization only; used for validation/test images."""
        return AugmentationSpec(
            brightness=0.0,
            contrast=0.0,
            saturation=0.0,
            hue=0.0,
            rotation_degrees=0.0,
            crop_scale=None,
            blur_kernel=None,
            erasing_p=0.0,
            mean=mean,
            std=std,
            output_side=output_side,
        )


def normalize_image(image: np.ndarray, mean=DEFAULT_MEAN, std=DEFAULT_STD) -> np.ndarray:
    """Scale to [0, 1] (uint8 inputs) and standardize per channel."""
    x = to_float(image)
    return (x - np.asarray(mean, dtype=np.float64)) / np.asarray(std, dtype=np.float64)


# Luminance weights for the grayscale used by contrast/saturation jitter.
_LUMA = np.array([0.299, 0.587, 0.114])


def _hue_rotation_matrix(angle: float) -> np.ndarray:
    """Rotation of RGB space about the gray axis (1,1,1)/sqrt(3) by ``angle`` radians."""
    u = np.full(3, 1.0 / math.sqrt(3.0))
    k = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    return math.cos(angle) * np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * np.outer(u, u)


def augment(image: np.ndarray, spec: AugmentationSpec, seed) -> np.ndarray:
    """Normalize then augment one image; deterministic given (spec, seed).

    The input must be ``output_side`` square with 3 channels; the output is
    a float64 array of the same shape.  With every transform disabled this
    is exactly ``normalize_image``.
    """
    arr = np.asarray(image)
    side = spec.output_side
    if arr.shape != (side, side, 3):
        raise InvalidInputError(
            f"augment expects a {side}x{side}x3 image, got shape {arr.shape}"
        )
    rng = np.random.default_rng(seed)
    x = normalize_image(arr, spec.mean, spec.std)

    # Color jitter: brightness, contrast, saturation, hue, in fixed order.
    if spec.brightness > 0:
        x = x * rng.uniform(1 - spec.brightness, 1 + spec.brightness)
    if spec.contrast > 0:
        m = float((x @ _LUMA).mean())
        x = (x - m) * rng.uniform(1 - spec.contrast, 1 + spec.contrast) + m
    if spec.saturation > 0:
        gray = (x @ _LUMA)[:, :, None]
        x = gray + (x - gray) * rng.uniform(1 - spec.saturation, 1 + spec.saturation)
    if spec.hue > 0:
        angle = rng.uniform(-spec.hue, spec.hue) * 2.0 * math.pi
        x = x @ _hue_rotation_matrix(angle).T

    if spec.rotation_degrees > 0:
        x = rotate_image(x, rng.uniform(-spec.rotation_degrees, spec.rotation_degrees))

    if spec.crop_scale is not None:
        scale = rng.uniform(*spec.crop_scale)
        crop_side = int(round(math.sqrt(scale) * side))
        crop_side = min(max(crop_side, 1), side)
        y0 = int(rng.integers(0, side - crop_side + 1))
        x0 = int(rng.integers(0, side - crop_side + 1))
        x = resize_image(x[y0 : y0 + crop_side, x0 : x0 + crop_side], side)

    if spec.blur_kernel is not None:
        x = gaussian_blur(x, spec.blur_kernel, rng.uniform(*spec.blur_sigma))

    if spec.erasing_p > 0 and rng.random() < spec.erasing_p:
        area = rng.uniform(*spec.erasing_area) * side * side
        e_side = min(max(int(round(math.sqrt(area))), 1), side)
        y0 = int(rng.integers(0, side - e_side + 1))
        x0 = int(rng.integers(0, side - e_side + 1))
        x[y0 : y0 + e_side, x0 : x0 + e_side] = 0.0

    return x

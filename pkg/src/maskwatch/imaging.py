"""Pixel-level image operations, all on H-by-W-by-3 numpy arrays.

Sampling conventions, fixed once here so every caller agrees:

* Bilinear interpolation uses half-pixel centers: output pixel i samples
  source coordinate (i + 0.5) * scale - 0.5, with edge clamping.
* Resizing is square-to-square and does NOT preserve aspect ratio; a
  non-square input is simply stretched.
* Rotation is counter-clockwise about the image center, bilinear, with
  out-of-frame samples filled with a constant.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError


def load_image(path) -> np.ndarray:
    """Read an image file as an H-by-W-by-3 uint8 RGB array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_image(image: np.ndarray, path) -> None:
    """Write an H-by-W-by-3 array as an image file; floats are clipped to [0, 255]."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)


def to_float(image: np.ndarray) -> np.ndarray:
    """Map a uint8 image to float64 in [0, 1]; float input passes through as float64."""
    arr = np.asarray(image)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)


def _sample_coords(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel-center source coordinates split into (lo index, hi index, frac)."""
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize_image(image: np.ndarray, side: int) -> np.ndarray:
    """Bilinearly resize an image to side-by-side.

    Aspect ratio is not preserved: non-square inputs are stretched.  Integer
    inputs come back rounded in the same dtype; float inputs come back as
    float64.
    """
    arr = np.asarray(image)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"expected a non-empty HxWxC image, got shape {arr.shape}")
    if side < 1:
        raise InvalidInputError(f"target side must be >= 1, got {side}")

    h, w = arr.shape[:2]
    ylo, yhi, fy = _sample_coords(side, h)
    xlo, xhi, fx = _sample_coords(side, w)
    fy = fy[:, None, None]
    fx = fx[None, :, None]

    src = arr.astype(np.float64)
    top = src[ylo][:, xlo] * (1 - fx) + src[ylo][:, xhi] * fx
    bot = src[yhi][:, xlo] * (1 - fx) + src[yhi][:, xhi] * fx
    out = top * (1 - fy) + bot * fy

    if np.issubdtype(arr.dtype, np.integer):
        info = np.iinfo(arr.dtype)
        out = np.clip(np.rint(out), info.min, info.max).astype(arr.dtype)
    return out[:, :, 0] if squeeze else out


def _bilinear_at(image: np.ndarray, ys: np.ndarray, xs: np.ndarray, fill: float) -> np.ndarray:
    """Sample image (H, W, C) at float coordinates; out-of-frame points get fill."""
    h, w = image.shape[:2]
    inside = (ys > -1.0) & (ys < h) & (xs > -1.0) & (xs < w)
    yc = np.clip(ys, 0.0, h - 1.0)
    xc = np.clip(xs, 0.0, w - 1.0)
    ylo = np.floor(yc).astype(np.intp)
    xlo = np.floor(xc).astype(np.intp)
    yhi = np.minimum(ylo + 1, h - 1)
    xhi = np.minimum(xlo + 1, w - 1)
    fy = (yc - ylo)[..., None]
    fx = (xc - xlo)[..., None]
    out = (
        image[ylo, xlo] * (1 - fy) * (1 - fx)
        + image[ylo, xhi] * (1 - fy) * fx
        + image[yhi, xlo] * fy * (1 - fx)
        + image[yhi, xhi] * fy * fx
    )
    out[~inside] = fill
    return out


def rotate_image(image: np.ndarray, degrees: float, fill: float = 0.0) -> np.ndarray:
    """Rotate counter-clockwise about the image center, keeping the shape.

    Bilinear resampling; pixels whose source lands outside the frame are
    set to ``fill`` (0 is the mean pixel once images are normalized).
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInputError(f"expected an HxWxC image, got shape {arr.shape}")
    h, w = arr.shape[:2]
    theta = np.deg2rad(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0

    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    # Inverse map: rotate output coordinates by -theta around the center.
    dx, dy = xx - cx, yy - cy
    src_x = cos_t * dx - sin_t * dy + cx
    src_y = sin_t * dx + cos_t * dy + cy
    return _bilinear_at(arr, src_y, src_x, fill)


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Discrete 1-D Gaussian kernel of odd length ``size``, normalized to sum 1."""
    if size < 1 or size % 2 == 0:
        raise InvalidInputError(f"kernel size must be a positive odd integer, got {size}")
    xs = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(xs**2) / (2.0 * sigma**2))
    return k / k.sum()


def gaussian_blur(image: np.ndarray, size: int, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflect padding; shape-preserving."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInputError(f"expected an HxWxC image, got shape {arr.shape}")
    k = gaussian_kernel(size, sigma)
    pad = size // 2
    padded = np.pad(arr, ((pad, pad), (0, 0), (0, 0)), mode="reflect")
    out = np.zeros_like(arr)
    for off in range(size):
        out += k[off] * padded[off : off + arr.shape[0]]
    padded = np.pad(out, ((0, 0), (pad, pad), (0, 0)), mode="reflect")
    out = np.zeros_like(arr)
    for off in range(size):
        out += k[off] * padded[:, off : off + arr.shape[1]]
    return out


def crop_pixels(frame: np.ndarray, y0: int, y1: int, x0: int, x1: int) -> np.ndarray:
    """Crop with explicit bounds checking; never reads outside the frame."""
    h, w = frame.shape[:2]
    if not (0 <= y0 < y1 <= h and 0 <= x0 < x1 <= w):
        raise InvalidInputError(
            f"crop bounds ({y0}:{y1}, {x0}:{x1}) fall outside a {h}x{w} frame"
        )
    return frame[y0:y1, x0:x1]

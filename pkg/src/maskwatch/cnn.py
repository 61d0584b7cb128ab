"""A small numpy CNN classifier with explicit forward/backward passes.

Architecture: two convolution blocks (3x3 same-padding convolution,
leaky-ReLU, max pooling) followed by two linear layers with a leaky-ReLU
between them; the final layer emits raw 3-class logits.  Everything is
implemented on plain numpy arrays (im2col + GEMM for the convolutions),
which keeps desk-scale training fast, fully deterministic for a given
seed, and free of framework dependencies.

Large pretrained backbones (DenseNet, MobileNet, Inception, ResNet, ...)
are not reimplemented here; they participate through the
:class:`ClassifierBackend` interface as runtime adapters.
"""

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .augment import DEFAULT_MEAN, DEFAULT_STD
from .errors import ConfigError, InvalidInputError, ModelFormatError
from .imaging import to_float

MODEL_MAGIC = "maskwatch-model"
MODEL_FORMAT_VERSION = 1


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis``."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def leaky_relu_grad(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, 1.0, slope).astype(x.dtype)


@dataclass(frozen=True)
class CnnSpec:
    """Structure of the two-conv/two-linear classifier.

    conv_blocks: two (out_channels, kernel_size, pool_size) triples.
    linear_widths: hidden width and output width; output must be 3.
    """

    conv_blocks: Tuple[Tuple[int, int, int], ...] = ((16, 3, 2), (32, 3, 2))
    linear_widths: Tuple[int, int] = (128, 3)
    leaky_slope: float = 0.01
    input_side: int = 128
    num_classes: int = 3

    def __post_init__(self):
        if len(self.conv_blocks) != 2:
            raise ConfigError("spec requires exactly two conv blocks")
        if len(self.linear_widths) != 2:
            raise ConfigError("spec requires exactly two linear layers")
        if self.linear_widths[-1] != self.num_classes:
            raise ConfigError(
                f"final linear width must equal num_classes={self.num_classes}, "
                f"got {self.linear_widths[-1]}"
            )
        side = self.input_side
        for ch, k, p in self.conv_blocks:
            if ch < 1 or k < 1 or k % 2 == 0 or p < 1:
                raise ConfigError(f"bad conv block ({ch}, {k}, {p}): need ch>=1, odd k, pool>=1")
            if side % p != 0:
                raise ConfigError(f"pool size {p} does not divide spatial side {side}")
            side //= p
        if self.leaky_slope < 0:
            raise ConfigError("leaky_slope must be >= 0")

    @property
    def flat_features(self) -> int:
        side = self.input_side
        for _, _, p in self.conv_blocks:
            side //= p
        return side * side * self.conv_blocks[-1][0]

    def to_dict(self) -> dict:
        return {
            "conv_blocks": [list(b) for b in self.conv_blocks],
            "linear_widths": list(self.linear_widths),
            "leaky_slope": self.leaky_slope,
            "input_side": self.input_side,
            "num_classes": self.num_classes,
        }

    @staticmethod
    def from_dict(d: dict) -> "CnnSpec":
        return CnnSpec(
            conv_blocks=tuple(tuple(b) for b in d["conv_blocks"]),
            linear_widths=tuple(d["linear_widths"]),
            leaky_slope=float(d["leaky_slope"]),
            input_side=int(d["input_side"]),
            num_classes=int(d["num_classes"]),
        )


class ClassifierBackend:
    """Interface every mask-wearing classifier satisfies.

    predict_logits takes a batch of images (B, side, side, 3), uint8 or
    float in [0, 1], applies the backend's own preprocessing, and returns
    finite logits (B, num_classes) preserving batch order.  Must be safe
    for concurrent calls on a frozen model.
    """

    def predict_logits(self, images: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameter_count(self) -> int:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Layer primitives (stride-1 same-padding conv via im2col, 2x2-style pooling)
# ---------------------------------------------------------------------------


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(B, H, W, C) -> (B*H*W, k*k*C) patch matrix with zero same-padding."""
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))  # (B, H, W, C, k, k)
    b, h, w = x.shape[0], x.shape[1], x.shape[2]
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(b * h * w, k * k * x.shape[3])


def conv_forward(x, weight, bias):
    """Same-padding stride-1 convolution; returns (output, patch matrix)."""
    k = weight.shape[0]
    col = _im2col(x, k)
    out = col @ weight.reshape(-1, weight.shape[3]) + bias
    return out.reshape(x.shape[0], x.shape[1], x.shape[2], weight.shape[3]), col


def conv_backward(dout, col, weight, in_channels):
    """Gradients of conv_forward: returns (dx, dweight, dbias)."""
    k = weight.shape[0]
    dflat = dout.reshape(-1, dout.shape[3])
    dweight = (col.T @ dflat).reshape(weight.shape)
    dbias = dflat.sum(axis=0)
    # Input gradient = same-geometry convolution with the spatially flipped
    # kernel and swapped channel axes.
    w_rot = weight[::-1, ::-1].transpose(0, 1, 3, 2)
    dcol = _im2col(dout, k)
    dx = dcol @ w_rot.reshape(-1, in_channels)
    return dx.reshape(dout.shape[0], dout.shape[1], dout.shape[2], in_channels), dweight, dbias


def maxpool_forward(x, p):
    """Non-overlapping p-by-p max pooling; returns (output, argmax indices)."""
    b, h, w, c = x.shape
    win = x.reshape(b, h // p, p, w // p, p, c).transpose(0, 1, 3, 5, 2, 4)
    win = win.reshape(b, h // p, w // p, c, p * p)
    idx = win.argmax(axis=-1)  # first maximum wins ties
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool_backward(dout, idx, p, x_shape):
    b, h, w, c = x_shape
    dwin = np.zeros((b, h // p, w // p, c, p * p), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    dwin = dwin.reshape(b, h // p, w // p, c, p, p).transpose(0, 1, 4, 2, 5, 3)
    return dwin.reshape(b, h, w, c)


class NumpyCnn(ClassifierBackend):
    """Trainable numpy implementation of :class:`CnnSpec`.

    Parameters are float32 by default; pass dtype=np.float64 for tasks like
    finite-difference checks where roundoff matters.  ``normalization``
    (per-channel mean/std on [0, 1] inputs) is applied inside
    predict_logits so pipeline callers can feed plain images.
    """

    def __init__(self, spec: CnnSpec, seed: int, dtype=np.float32,
                 normalization=(DEFAULT_MEAN, DEFAULT_STD)):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.normalization = (tuple(normalization[0]), tuple(normalization[1]))
        self.params = {}
        rng = np.random.default_rng(seed)

        in_ch = 3
        for i, (out_ch, k, _pool) in enumerate(spec.conv_blocks, start=1):
            bound = 1.0 / np.sqrt(k * k * in_ch)
            self.params[f"conv{i}_w"] = rng.uniform(-bound, bound, (k, k, in_ch, out_ch)).astype(self.dtype)
            self.params[f"conv{i}_b"] = rng.uniform(-bound, bound, out_ch).astype(self.dtype)
            in_ch = out_ch

        in_feat = spec.flat_features
        for i, width in enumerate(spec.linear_widths, start=1):
            bound = 1.0 / np.sqrt(in_feat)
            self.params[f"fc{i}_w"] = rng.uniform(-bound, bound, (in_feat, width)).astype(self.dtype)
            self.params[f"fc{i}_b"] = rng.uniform(-bound, bound, width).astype(self.dtype)
            in_feat = width

    # -- inference ---------------------------------------------------------

    def predict_logits(self, images: np.ndarray) -> np.ndarray:
        images = np.asarray(images)
        if images.ndim != 4:
            raise InvalidInputError(
                f"predict_logits expects a batch (B, side, side, 3), got shape {images.shape}"
            )
        mean, std = self.normalization
        x = (to_float(images) - np.asarray(mean)) / np.asarray(std)
        logits, _ = self.forward(x.astype(self.dtype), want_cache=False)
        return logits

    def predict(self, images: np.ndarray) -> np.ndarray:
        """Hard class ids for a batch of images."""
        return np.argmax(self.predict_logits(images), axis=1)

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    # -- training plumbing (operates on already-normalized arrays) ----------

    def forward(self, x: np.ndarray, want_cache: bool = True):
        """Forward pass on a normalized batch (B, side, side, 3).

        Returns (logits, cache); cache is None when want_cache is False.
        Pure function of (params, x): safe for concurrent inference.
        """
        x = np.asarray(x, dtype=self.dtype)
        slope = self.spec.leaky_slope
        cache = {"x_shapes": [], "cols": [], "pre_acts": [], "pool_idx": []} if want_cache else None

        h = x
        for i, (_, _, pool) in enumerate(self.spec.conv_blocks, start=1):
            out, col = conv_forward(h, self.params[f"conv{i}_w"], self.params[f"conv{i}_b"])
            act = leaky_relu(out, slope)
            pooled, idx = maxpool_forward(act, pool)
            if want_cache:
                cache["x_shapes"].append(h.shape)
                cache["cols"].append(col)
                cache["pre_acts"].append(out)
                cache["pool_idx"].append(idx)
                cache[f"act_shape{i}"] = act.shape
            h = pooled

        flat = h.reshape(h.shape[0], -1)
        z1 = flat @ self.params["fc1_w"] + self.params["fc1_b"]
        a1 = leaky_relu(z1, slope)
        logits = a1 @ self.params["fc2_w"] + self.params["fc2_b"]
        if want_cache:
            cache["pooled_shape"] = h.shape
            cache["flat"] = flat
            cache["z1"] = z1
            cache["a1"] = a1
        return logits.astype(np.float64), cache

    def backward(self, cache, dlogits: np.ndarray) -> dict:
        """Parameter gradients given d(loss)/d(logits) for the cached batch."""
        slope = self.spec.leaky_slope
        grads = {}
        dlogits = np.asarray(dlogits, dtype=self.dtype)

        grads["fc2_w"] = cache["a1"].T @ dlogits
        grads["fc2_b"] = dlogits.sum(axis=0)
        da1 = dlogits @ self.params["fc2_w"].T
        dz1 = da1 * leaky_relu_grad(cache["z1"], slope)
        grads["fc1_w"] = cache["flat"].T @ dz1
        grads["fc1_b"] = dz1.sum(axis=0)
        dflat = dz1 @ self.params["fc1_w"].T
        dh = dflat.reshape(cache["pooled_shape"])

        for i in range(len(self.spec.conv_blocks), 0, -1):
            pool = self.spec.conv_blocks[i - 1][2]
            dact = maxpool_backward(dh, cache["pool_idx"][i - 1], pool, cache[f"act_shape{i}"])
            dout = dact * leaky_relu_grad(cache["pre_acts"][i - 1], slope)
            in_ch = cache["x_shapes"][i - 1][3]
            dh, dw, db = conv_backward(dout, cache["cols"][i - 1], self.params[f"conv{i}_w"], in_ch)
            grads[f"conv{i}_w"] = dw
            grads[f"conv{i}_b"] = db
        return grads

    def copy_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}


def build_cnn(spec: CnnSpec, seed: int, dtype=np.float32,
              normalization=(DEFAULT_MEAN, DEFAULT_STD)) -> NumpyCnn:
    """Deterministically initialized CNN; same (spec, seed) -> same weights."""
    if not isinstance(spec, CnnSpec):
        raise ConfigError(f"expected a CnnSpec, got {type(spec).__name__}")
    return NumpyCnn(spec, seed, dtype=dtype, normalization=normalization)


# ---------------------------------------------------------------------------
# Model files: a zip (npz) of parameter arrays plus a JSON metadata entry.
# ---------------------------------------------------------------------------


def save_model(backend: NumpyCnn, path) -> None:
    if not isinstance(backend, NumpyCnn):
        raise InvalidInputError("only NumpyCnn backends are serializable")
    meta = {
        "magic": MODEL_MAGIC,
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "numpy-cnn",
        "spec": backend.spec.to_dict(),
        "dtype": backend.dtype.name,
        "normalization": [list(backend.normalization[0]), list(backend.normalization[1])],
    }
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **backend.params)


def load_model(path) -> NumpyCnn:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        archive = np.load(path, allow_pickle=False)
    except (zipfile.BadZipFile, ValueError, OSError) as exc:
        raise ModelFormatError(f"{path} is not a maskwatch model container: {exc}") from exc
    with archive:
        if "__meta__" not in archive.files:
            raise ModelFormatError(f"{path} has no metadata entry")
        try:
            meta = json.loads(str(archive["__meta__"]))
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path} carries unparseable metadata: {exc}") from exc
        if meta.get("magic") != MODEL_MAGIC:
            raise ModelFormatError(
                f"{path} has wrong magic header {meta.get('magic')!r} (expected {MODEL_MAGIC!r})"
            )
        if "format_version" not in meta:
            raise ModelFormatError(f"{path} is missing the mandatory format_version field")
        if int(meta["format_version"]) > MODEL_FORMAT_VERSION:
            raise ModelFormatError(
                f"{path} uses format_version {meta['format_version']}, "
                f"newer than supported {MODEL_FORMAT_VERSION}"
            )
        spec = CnnSpec.from_dict(meta["spec"])
        norm = meta.get("normalization", [list(DEFAULT_MEAN), list(DEFAULT_STD)])
        net = NumpyCnn(spec, seed=0, dtype=np.dtype(meta["dtype"]),
                       normalization=(tuple(norm[0]), tuple(norm[1])))
        for key in net.params:
            if key not in archive.files:
                raise ModelFormatError(f"{path} is missing parameter {key!r}")
            stored = archive[key]
            if stored.shape != net.params[key].shape:
                raise ModelFormatError(
                    f"{path} parameter {key!r} has shape {stored.shape}, "
                    f"expected {net.params[key].shape}"
                )
            net.params[key] = stored.astype(net.dtype)
    return net

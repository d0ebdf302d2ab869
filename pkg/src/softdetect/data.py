"""Datasets, synthetic out-of-distribution sources, and distortions.

Covers IDX image ingestion, Gaussian/uniform noise images, colored 1-D
noise (white/pink/brown via FFT spectral shaping), parametrized image
corruptions, RMS-relative signal mixing, and class-holdout splits.

A bundled stand-in corpus for handwritten-digit experiments is built
from scikit-learn's packaged 8x8 digits, upsampled to 28x28 and
augmented, so the full pipeline runs offline at desk scale. Real IDX
files (e.g. the original 28x28 digit corpus) drop in through
``load_idx`` with no other changes.
"""

from __future__ import annotations

import dataclasses
import gzip
import struct
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from ._kernels import blur2d, affine_bilinear, rotate_bilinear

__all__ = [
    "Dataset",
    "GaussianNoise",
    "UniformNoise",
    "Blur",
    "Rotation",
    "ColoredNoise",
    "DistortionKind",
    "IdxError",
    "IdxBadMagic",
    "IdxTruncated",
    "IdxCountMismatch",
    "load_idx",
    "write_idx",
    "gen_gaussian_images",
    "gen_uniform_images",
    "colored_noise",
    "distort",
    "mix_signals",
    "class_holdout_split",
    "gen_synthetic_digits",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclasses.dataclass
class Dataset:
    """A collection of examples: inputs are rows, labels optional.

    ``labels is None`` marks an unlabeled set (noise images and other
    out-of-distribution sources); ``class_count`` is then also None.
    """

    inputs: np.ndarray
    labels: Optional[np.ndarray]
    class_count: Optional[int]
    provenance: str
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a 2-D (n, d) array")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs must be finite")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.inputs.shape[0],):
                raise ValueError("labels must be one per input row")
            if self.class_count is None or self.class_count < 1:
                raise ValueError("labeled datasets need class_count >= 1")
            if self.labels.size and (
                self.labels.min() < 0 or self.labels.max() >= self.class_count
            ):
                raise ValueError("labels out of range")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def subset(self, indices, provenance: Optional[str] = None) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(
            inputs=self.inputs[idx],
            labels=None if self.labels is None else self.labels[idx],
            class_count=self.class_count,
            provenance=provenance or self.provenance,
            metadata=dict(self.metadata),
        )


# ---------------------------------------------------------------------------
# distortion recipes


@dataclasses.dataclass(frozen=True)
class GaussianNoise:
    """Additive iid Gaussian pixel noise, clipped back to [0, 1]."""

    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclasses.dataclass(frozen=True)
class UniformNoise:
    """Additive iid Uniform[-amplitude, amplitude] pixel noise, clipped."""

    amplitude: float = 0.5

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")


@dataclasses.dataclass(frozen=True)
class Blur:
    """Gaussian blur with the given standard deviation in pixels."""

    sigma_px: float

    def __post_init__(self):
        if self.sigma_px <= 0:
            raise ValueError("sigma_px must be positive")


@dataclasses.dataclass(frozen=True)
class Rotation:
    """Rotation about the image center, bilinear, zero background fill."""

    degrees: float

    def __post_init__(self):
        if self.degrees == 0:
            raise ValueError("degrees must be nonzero")


@dataclasses.dataclass(frozen=True)
class ColoredNoise:
    """Additive 1/f^beta noise mixed at an RMS-relative amplitude ratio."""

    beta: int
    amplitude_ratio: float

    def __post_init__(self):
        if self.beta not in (0, 1, 2):
            raise ValueError("beta must be 0 (white), 1 (pink) or 2 (brown)")
        if not 0 < self.amplitude_ratio <= 1:
            raise ValueError("amplitude_ratio must be in (0, 1]")


DistortionKind = Union[GaussianNoise, UniformNoise, Blur, Rotation, ColoredNoise]


# ---------------------------------------------------------------------------
# IDX ingestion


class IdxError(Exception):
    """Base class for IDX file problems."""


class IdxBadMagic(IdxError):
    pass


class IdxTruncated(IdxError):
    pass


class IdxCountMismatch(IdxError):
    pass


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, count: int, path) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise IdxTruncated(f"truncated IDX file: {path}")
    return data


def _read_idx_images(path) -> np.ndarray:
    with _open_maybe_gzip(path) as fh:
        magic, n, rows, cols = struct.unpack(">iiii", _read_exact(fh, 16, path))
        if magic != IDX_IMAGES_MAGIC:
            raise IdxBadMagic(f"bad magic {magic:#010x} in image file: {path}")
        raw = _read_exact(fh, n * rows * cols, path)
        if fh.read(1):
            raise IdxTruncated(f"trailing bytes in IDX file: {path}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols)
    return pixels.astype(np.float64) / 255.0


def _read_idx_labels(path) -> np.ndarray:
    with _open_maybe_gzip(path) as fh:
        magic, n = struct.unpack(">ii", _read_exact(fh, 8, path))
        if magic != IDX_LABELS_MAGIC:
            raise IdxBadMagic(f"bad magic {magic:#010x} in label file: {path}")
        raw = _read_exact(fh, n, path)
        if fh.read(1):
            raise IdxTruncated(f"trailing bytes in IDX file: {path}")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def load_idx(images_path, labels_path) -> Dataset:
    """Load a paired IDX image/label file set (plain or gzipped).

    Pixels come back scaled to [0, 1]. The two files must agree on the
    example count. Bad magic numbers, truncation, and count mismatches
    raise distinct exceptions and never yield a partial dataset.
    """
    inputs = _read_idx_images(images_path)
    labels = _read_idx_labels(labels_path)
    if inputs.shape[0] != labels.shape[0]:
        raise IdxCountMismatch(
            f"image count {inputs.shape[0]} != label count {labels.shape[0]}"
        )
    class_count = int(labels.max()) + 1 if labels.size else 0
    return Dataset(
        inputs=inputs,
        labels=labels,
        class_count=class_count,
        provenance=f"idx:{images_path}",
    )


def write_idx(dataset: Dataset, images_path, labels_path, side: Optional[int] = None):
    """Write a labeled dataset as an IDX image/label pair.

    Inputs in [0, 1] are quantized to uint8 by round(x * 255); ``side``
    defaults to the square root of the input dimension. Paths ending in
    ``.gz`` are gzip-compressed.
    """
    if dataset.labels is None:
        raise ValueError("IDX export needs a labeled dataset")
    n, d = dataset.inputs.shape
    if side is None:
        side = int(round(d**0.5))
    if side * side != d:
        raise ValueError("input dimension is not a square image")
    pixels = np.clip(np.round(dataset.inputs * 255.0), 0, 255).astype(np.uint8)
    labels = dataset.labels.astype(np.uint8)

    def _writer(path):
        return gzip.open(path, "wb") if str(path).endswith(".gz") else open(path, "wb")

    with _writer(images_path) as fh:
        fh.write(struct.pack(">iiii", IDX_IMAGES_MAGIC, n, side, side))
        fh.write(pixels.tobytes())
    with _writer(labels_path) as fh:
        fh.write(struct.pack(">ii", IDX_LABELS_MAGIC, n))
        fh.write(labels.tobytes())


# ---------------------------------------------------------------------------
# synthetic out-of-distribution sources


def gen_gaussian_images(n: int, d: int, seed: int) -> Dataset:
    """iid Normal(0.5, 0.25) pixels clipped to [0, 1]; unlabeled."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    x = np.clip(rng.normal(0.5, 0.25, size=(n, d)), 0.0, 1.0)
    return Dataset(inputs=x, labels=None, class_count=None, provenance="gaussian-noise")


def gen_uniform_images(n: int, d: int, seed: int) -> Dataset:
    """iid Uniform[0, 1] pixels; unlabeled."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, d))
    return Dataset(inputs=x, labels=None, class_count=None, provenance="uniform-noise")


def colored_noise(length: int, beta: int, seed: int) -> np.ndarray:
    """Unit-variance noise with power spectral density proportional to 1/f^beta.

    A white Gaussian signal is shaped in the frequency domain: each
    positive-frequency amplitude is divided by f^(beta/2), the DC bin is
    zeroed (so the output is exactly zero-mean), and the result is
    inverse-transformed and scaled to unit sample variance. beta 0, 1, 2
    give white, pink, and brown noise.
    """
    if length < 64 or length & (length - 1):
        raise ValueError("length must be a power of two >= 64")
    if beta not in (0, 1, 2):
        raise ValueError("beta must be 0, 1 or 2")
    rng = np.random.default_rng(seed)
    white = rng.normal(size=length)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(length)
    shaping = np.zeros_like(freqs)
    shaping[1:] = freqs[1:] ** (-beta / 2.0)
    signal = np.fft.irfft(spectrum * shaping, n=length)
    return signal / signal.std()


def mix_signals(clean, noise, volume_ratio: float) -> np.ndarray:
    """clean + volume_ratio * noise rescaled to clean's RMS.

    The added term's RMS is exactly volume_ratio times the clean
    signal's RMS, so a zero-RMS clean signal passes through unchanged.
    """
    c = np.asarray(clean, dtype=np.float64)
    v = np.asarray(noise, dtype=np.float64)
    if c.shape != v.shape:
        raise ValueError("clean and noise must have equal length")
    if not 0 < volume_ratio <= 1:
        raise ValueError("volume_ratio must be in (0, 1]")
    rms_noise = float(np.sqrt(np.mean(v**2)))
    if rms_noise == 0.0:
        raise ValueError("noise has zero RMS")
    rms_clean = float(np.sqrt(np.mean(c**2)))
    return c + volume_ratio * (rms_clean / rms_noise) * v


def _next_pow2(n: int) -> int:
    p = 64
    while p < n:
        p *= 2
    return p


def distort(x, kind: DistortionKind, shape=None, seed: int = 0) -> np.ndarray:
    """Apply one distortion recipe to a single flat example, seeded.

    Additive pixel noises clip back to [0, 1]. Blur and Rotation need
    the 2-D ``shape`` and act on the reshaped image; both preserve the
    [0, 1] range by construction. ColoredNoise treats the input as a
    1-D signal and mixes at the recipe's RMS-relative amplitude ratio
    (no clipping; signals are not pixel-valued).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    rng = np.random.default_rng(seed)
    if isinstance(kind, GaussianNoise):
        return np.clip(x + rng.normal(0.0, kind.sigma, size=x.shape), 0.0, 1.0)
    if isinstance(kind, UniformNoise):
        noise = rng.uniform(-kind.amplitude, kind.amplitude, size=x.shape)
        return np.clip(x + noise, 0.0, 1.0)
    if isinstance(kind, (Blur, Rotation)):
        if shape is None or len(shape) != 2 or shape[0] * shape[1] != x.size:
            raise ValueError("Blur and Rotation need a matching 2-D shape")
        img = x.reshape(shape)
        if isinstance(kind, Blur):
            return blur2d(img, kind.sigma_px).ravel()
        return rotate_bilinear(img, kind.degrees).ravel()
    if isinstance(kind, ColoredNoise):
        sub_seed = int(rng.integers(0, 2**63 - 1))
        noise = colored_noise(_next_pow2(x.size), kind.beta, sub_seed)[: x.size]
        return mix_signals(x, noise, kind.amplitude_ratio)
    raise TypeError(f"unknown distortion kind: {kind!r}")


# ---------------------------------------------------------------------------
# class holdout


def class_holdout_split(dataset: Dataset, held_out_classes) -> tuple[Dataset, Dataset]:
    """Split by class: kept classes (labels remapped) vs held-out classes.

    Kept-class labels are remapped to 0..K-h-1 preserving their original
    order; the mapping new -> original is stored in the in-distribution
    half's metadata under "label_map". Held-out examples keep their
    original labels.
    """
    if dataset.labels is None:
        raise ValueError("class holdout needs a labeled dataset")
    held = sorted(set(int(c) for c in held_out_classes))
    k = dataset.class_count
    if not held:
        raise ValueError("held_out_classes is empty")
    if any(c < 0 or c >= k for c in held):
        raise ValueError("held_out_classes outside [0, class_count)")
    kept = [c for c in range(k) if c not in held]
    if not kept:
        raise ValueError("cannot hold out every class")

    out_mask = np.isin(dataset.labels, held)
    remap = {old: new for new, old in enumerate(kept)}
    in_labels = np.array([remap[int(c)] for c in dataset.labels[~out_mask]], dtype=np.int64)

    in_dist = Dataset(
        inputs=dataset.inputs[~out_mask],
        labels=in_labels,
        class_count=len(kept),
        provenance=f"{dataset.provenance}/kept-classes",
        metadata={**dataset.metadata, "label_map": kept},
    )
    out_dist = Dataset(
        inputs=dataset.inputs[out_mask],
        labels=dataset.labels[out_mask],
        class_count=k,
        provenance=f"{dataset.provenance}/held-out-classes",
        metadata={**dataset.metadata, "held_out_classes": held},
    )
    return in_dist, out_dist


# ---------------------------------------------------------------------------
# bundled digit corpus

# Base digits are split train/test once, with a constant seed, so no base
# digit ever appears on both sides regardless of the caller's seed.
_BASE_SPLIT_SEED = 20240

DIGIT_SIDE = 28
DIGIT_DIM = DIGIT_SIDE * DIGIT_SIDE
DIGIT_CLASSES = 10


def _resize_bilinear(img: np.ndarray, out_side: int) -> np.ndarray:
    """Bilinear resize of a square image, pixel centers aligned, edge clamp."""
    in_side = img.shape[0]
    scale = in_side / out_side
    coords = (np.arange(out_side) + 0.5) * scale - 0.5
    lo = np.clip(np.floor(coords).astype(np.int64), 0, in_side - 1)
    hi = np.clip(lo + 1, 0, in_side - 1)
    frac = np.clip(coords - lo, 0.0, 1.0)

    rows = img[lo][:, lo] * (1 - frac)[:, None] + img[hi][:, lo] * frac[:, None]
    rows_hi = img[lo][:, hi] * (1 - frac)[:, None] + img[hi][:, hi] * frac[:, None]
    return rows * (1 - frac)[None, :] + rows_hi * frac[None, :]


@lru_cache(maxsize=1)
def _digit_bases() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """28x28 base digits in [0,1], split once into train/test pools."""
    from sklearn.datasets import load_digits

    raw = load_digits()
    images = raw.images / 16.0
    labels = raw.target.astype(np.int64)
    upsampled = np.stack([_resize_bilinear(im, DIGIT_SIDE) for im in images])

    rng = np.random.default_rng(_BASE_SPLIT_SEED)
    train_idx, test_idx = [], []
    for cls in range(DIGIT_CLASSES):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(members.size)]
        cut = int(round(members.size * 0.8))
        train_idx.extend(members[:cut])
        test_idx.extend(members[cut:])
    train_idx = np.array(sorted(train_idx))
    test_idx = np.array(sorted(test_idx))
    return (
        upsampled[train_idx],
        labels[train_idx],
        upsampled[test_idx],
        labels[test_idx],
    )


def _augment_digit(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = affine_bilinear(
        img,
        degrees=rng.uniform(-10.0, 10.0),
        scale=rng.uniform(0.9, 1.1),
        shift_r=rng.uniform(-1.5, 1.5),
        shift_c=rng.uniform(-1.5, 1.5),
    )
    sigma = rng.uniform(0.0, 0.5)
    if sigma > 0.1:
        out = blur2d(out, sigma)
    out = out * rng.uniform(0.85, 1.1)
    out = out + rng.normal(0.0, rng.uniform(0.0, 0.03), size=out.shape)
    return np.clip(out, 0.0, 1.0)


def gen_synthetic_digits(n: int, seed: int, split: str = "train") -> Dataset:
    """A 28x28 ten-class digit corpus generated from bundled 8x8 digits.

    Each example is a seeded random augmentation (affine warp, optional
    blur, intensity jitter, light pixel noise) of a base digit. Base
    digits are partitioned between the train and test splits up front,
    so the two splits never share a source image and test error stays an
    honest generalization measure.
    """
    if split not in ("train", "test"):
        raise ValueError("split must be 'train' or 'test'")
    if n < 1:
        raise ValueError("n must be >= 1")
    tr_imgs, tr_labels, te_imgs, te_labels = _digit_bases()
    pool_imgs, pool_labels = (tr_imgs, tr_labels) if split == "train" else (te_imgs, te_labels)

    rng = np.random.default_rng(seed)
    picks = rng.integers(0, pool_imgs.shape[0], size=n)
    inputs = np.empty((n, DIGIT_DIM), dtype=np.float64)
    for i, j in enumerate(picks):
        inputs[i] = _augment_digit(pool_imgs[j], rng).ravel()
    return Dataset(
        inputs=inputs,
        labels=pool_labels[picks].copy(),
        class_count=DIGIT_CLASSES,
        provenance=f"synthetic-digits-{split}",
        metadata={"seed": seed, "base_pool": int(pool_imgs.shape[0])},
    )

"""Hot numeric kernels: Gaussian blur, affine resampling, GELU.

Each kernel has a numba ``@njit`` implementation and a pure-numpy one.
The JIT path is used when numba imports successfully, unless the
environment variable ``SOFTDETECT_NUMBA`` is set to ``0``/``false``/``off``
before the first import of this module. Both paths compute the same
floating-point expressions in the same accumulation order, so results
agree to within a few ulps; ``backend_name()`` reports which one is live.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import erf as _erf

__all__ = [
    "USE_NUMBA",
    "backend_name",
    "gelu",
    "gelu_grad",
    "gaussian_kernel_1d",
    "blur2d",
    "affine_bilinear",
    "rotate_bilinear",
]

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _numba_requested() -> bool:
    flag = os.environ.get("SOFTDETECT_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


def _numba_available() -> bool:
    if not _numba_requested():
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_available()


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def gelu_np(x):
    """x * Phi(x) with the exact standard-normal CDF."""
    x = np.asarray(x, dtype=np.float64)
    return x * (0.5 * (1.0 + _erf(x * _SQRT1_2)))


def gelu_grad_np(x):
    """d/dx [x * Phi(x)] = Phi(x) + x * phi(x)."""
    x = np.asarray(x, dtype=np.float64)
    cdf = 0.5 * (1.0 + _erf(x * _SQRT1_2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return cdf + x * pdf


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps truncated at 3 sigma."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def _blur2d_np(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable correlation, reflect-101 padding, taps accumulated in
    # ascending order (matches the jit loop).
    radius = len(kernel) // 2
    h, w = img.shape
    padded = np.pad(img, radius, mode="reflect")
    rows = np.zeros((h, w + 2 * radius), dtype=np.float64)
    for t in range(len(kernel)):
        rows += kernel[t] * padded[t:t + h, :]
    out = np.zeros((h, w), dtype=np.float64)
    for t in range(len(kernel)):
        out += kernel[t] * rows[:, t:t + w]
    return out


def _affine_bilinear_np(img, cos_t, sin_t, inv_scale, shift_r, shift_c):
    h, w = img.shape
    cr = (h - 1) / 2.0
    cc = (w - 1) / 2.0
    rr, cc_grid = np.meshgrid(
        np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij"
    )
    dr = (rr - cr - shift_r) * inv_scale
    dc = (cc_grid - cc - shift_c) * inv_scale
    src_r = cos_t * dr + sin_t * dc + cr
    src_c = -sin_t * dr + cos_t * dc + cc
    r0 = np.floor(src_r)
    c0 = np.floor(src_c)
    fr = src_r - r0
    fc = src_c - c0
    r0 = r0.astype(np.int64)
    c0 = c0.astype(np.int64)

    def sample(ri, ci):
        inside = (ri >= 0) & (ri < h) & (ci >= 0) & (ci < w)
        vals = img[np.clip(ri, 0, h - 1), np.clip(ci, 0, w - 1)]
        return np.where(inside, vals, 0.0)

    v00 = sample(r0, c0)
    v01 = sample(r0, c0 + 1)
    v10 = sample(r0 + 1, c0)
    v11 = sample(r0 + 1, c0 + 1)
    top = (1.0 - fc) * v00 + fc * v01
    bot = (1.0 - fc) * v10 + fc * v11
    return (1.0 - fr) * top + fr * bot


# ---------------------------------------------------------------------------
# numba implementations (compiled lazily on first use)
# ---------------------------------------------------------------------------

if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _gelu_nb(flat, out):
        for i in range(flat.shape[0]):
            x = flat[i]
            out[i] = x * (0.5 * (1.0 + math.erf(x * _SQRT1_2)))

    @njit(cache=True)
    def _gelu_grad_nb(flat, out):
        for i in range(flat.shape[0]):
            x = flat[i]
            cdf = 0.5 * (1.0 + math.erf(x * _SQRT1_2))
            pdf = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
            out[i] = cdf + x * pdf

    @njit(cache=True, inline="always")
    def _reflect(idx, n):
        if idx < 0:
            return -idx
        if idx >= n:
            return 2 * n - 2 - idx
        return idx

    @njit(cache=True)
    def _blur2d_nb(img, kernel):
        h, w = img.shape
        radius = kernel.shape[0] // 2
        rows = np.zeros((h, w + 2 * radius), dtype=np.float64)
        # vertical pass, evaluated at reflect-101 padded column coordinates
        for i in range(h):
            for j in range(-radius, w + radius):
                acc = 0.0
                for t in range(kernel.shape[0]):
                    acc += kernel[t] * img[_reflect(i + t - radius, h), _reflect(j, w)]
                rows[i, j + radius] = acc
        out = np.zeros((h, w), dtype=np.float64)
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for t in range(kernel.shape[0]):
                    acc += kernel[t] * rows[i, j + t]
                out[i, j] = acc
        return out

    @njit(cache=True)
    def _affine_bilinear_nb(img, cos_t, sin_t, inv_scale, shift_r, shift_c):
        h, w = img.shape
        cr = (h - 1) / 2.0
        cc = (w - 1) / 2.0
        out = np.zeros((h, w), dtype=np.float64)
        for r in range(h):
            for c in range(w):
                dr = (r - cr - shift_r) * inv_scale
                dc = (c - cc - shift_c) * inv_scale
                src_r = cos_t * dr + sin_t * dc + cr
                src_c = -sin_t * dr + cos_t * dc + cc
                r0 = int(math.floor(src_r))
                c0 = int(math.floor(src_c))
                fr = src_r - r0
                fc = src_c - c0
                v00 = img[r0, c0] if 0 <= r0 < h and 0 <= c0 < w else 0.0
                v01 = img[r0, c0 + 1] if 0 <= r0 < h and 0 <= c0 + 1 < w else 0.0
                v10 = img[r0 + 1, c0] if 0 <= r0 + 1 < h and 0 <= c0 < w else 0.0
                v11 = img[r0 + 1, c0 + 1] if 0 <= r0 + 1 < h and 0 <= c0 + 1 < w else 0.0
                top = (1.0 - fc) * v00 + fc * v01
                bot = (1.0 - fc) * v10 + fc * v11
                out[r, c] = (1.0 - fr) * top + fr * bot
        return out


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def gelu(x):
    """GELU activation x * Phi(x), elementwise over any array shape."""
    arr = np.asarray(x, dtype=np.float64)
    if USE_NUMBA:
        flat = np.ascontiguousarray(arr).ravel()
        out = np.empty(flat.size, dtype=np.float64)
        _gelu_nb(flat, out)
        out = out.reshape(arr.shape)
    else:
        out = gelu_np(arr)
    return float(out) if arr.ndim == 0 else out


def gelu_grad(x):
    """Derivative of GELU, elementwise."""
    arr = np.asarray(x, dtype=np.float64)
    if USE_NUMBA:
        flat = np.ascontiguousarray(arr).ravel()
        out = np.empty(flat.size, dtype=np.float64)
        _gelu_grad_nb(flat, out)
        out = out.reshape(arr.shape)
    else:
        out = gelu_grad_np(arr)
    return float(out) if arr.ndim == 0 else out


def blur2d(img: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur of a 2-D image, reflect padding, kernel cut at 3 sigma."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("blur2d expects a 2-D array")
    kernel = gaussian_kernel_1d(sigma)
    if len(kernel) // 2 >= min(img.shape):
        raise ValueError("blur kernel radius exceeds image size")
    if USE_NUMBA:
        return _blur2d_nb(img, kernel)
    return _blur2d_np(img, kernel)


def affine_bilinear(
    img: np.ndarray,
    degrees: float,
    scale: float = 1.0,
    shift_r: float = 0.0,
    shift_c: float = 0.0,
) -> np.ndarray:
    """Rotate/scale/translate a 2-D image about its center.

    Inverse-mapped bilinear resampling; samples falling outside the image
    read as 0 (dark background). ``degrees`` rotates row/col coordinates
    counter-clockwise, ``scale`` > 1 magnifies, shifts are in pixels.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("affine_bilinear expects a 2-D array")
    if scale <= 0:
        raise ValueError("scale must be positive")
    theta = math.radians(degrees)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    inv_scale = 1.0 / scale
    if USE_NUMBA:
        return _affine_bilinear_nb(img, cos_t, sin_t, inv_scale, shift_r, shift_c)
    return _affine_bilinear_np(img, cos_t, sin_t, inv_scale, shift_r, shift_c)


def rotate_bilinear(img: np.ndarray, degrees: float) -> np.ndarray:
    """Pure rotation about the image center, zero background."""
    return affine_bilinear(img, degrees)

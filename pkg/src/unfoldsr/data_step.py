"""Closed-form solver of the data subproblem and its dense oracle.

The data step returns the exact minimizer of

    ||y - (z conv k) down s||^2 + alpha * ||z - x_prev||^2

under periodic boundaries. The dense oracle builds the degradation matrix
explicitly and solves the normal equations; it exists to certify the
Fourier path on small images.
"""

from __future__ import annotations

import numpy as np

from .fourier import block_downsample, block_multiply, fft2, ifft2, psf2otf
from .imaging import as_image, zero_upsample

ALPHA_FLOOR = 1e-6
ALPHA_MIN = 1e-12
ORACLE_MAX_SIDE = 32


def _check_alpha(alpha: float) -> float:
    if not np.isfinite(alpha) or alpha < ALPHA_MIN:
        raise ValueError(f"data-step weight alpha={alpha!r} is below the division guard")
    return max(float(alpha), ALPHA_FLOOR)


def _check_shapes(x_prev: np.ndarray, y: np.ndarray, s: int):
    if x_prev.shape[0] != y.shape[0] * s or x_prev.shape[1] != y.shape[1] * s:
        raise ValueError(f"HR shape {x_prev.shape} is not {s} x LR shape {y.shape}")
    if x_prev.shape[2:] != y.shape[2:]:
        raise ValueError("HR and LR images have different channel counts")


class DataStep:
    """Data step with the kernel spectra precomputed for a fixed ``(y, k, s)``.

    The unfolded solver calls the step once per iteration with a new
    ``x_prev`` and ``alpha``; everything that depends only on the LR image,
    the kernel and the scale is computed here once.
    """

    def __init__(self, y, kernel, s: int):
        y = as_image(y)
        self.s = int(s)
        self.lr_shape = y.shape
        hr_hw = (y.shape[0] * self.s, y.shape[1] * self.s)
        otf = psf2otf(kernel, hr_hw)
        if y.ndim == 3:
            otf = otf[..., None]
        self.otf = otf
        self.otf_conj = np.conj(otf)
        self.otf_conj_fy = self.otf_conj * fft2(zero_upsample(y, self.s))
        self.otf_power_ds = block_downsample(np.abs(otf) ** 2, self.s)

    def __call__(self, x_prev, alpha: float) -> np.ndarray:
        x_prev = as_image(x_prev)
        hr_shape = (self.lr_shape[0] * self.s, self.lr_shape[1] * self.s) + self.lr_shape[2:]
        if x_prev.shape != hr_shape:
            raise ValueError(f"HR estimate shape {x_prev.shape}, expected {hr_shape}")
        alpha = _check_alpha(alpha)
        d = self.otf_conj_fy + alpha * fft2(x_prev)
        small = block_downsample(self.otf * d, self.s) / (self.otf_power_ds + alpha)
        return ifft2((d - block_multiply(self.otf_conj, small, self.s)) / alpha)


def data_step(x_prev, y, kernel, s: int, alpha: float) -> np.ndarray:
    """One-shot closed-form data step; see :class:`DataStep`."""
    x_prev = as_image(x_prev)
    y = as_image(y)
    _check_shapes(x_prev, y, s)
    return DataStep(y, kernel, s)(x_prev, alpha)


def convolution_matrix(kernel, shape) -> np.ndarray:
    """Dense circulant matrix of circular convolution on a row-major grid."""
    k = np.asarray(kernel, dtype=np.float64)
    h, w = shape
    kh, kw = k.shape
    ch, cw = kh // 2, kw // 2
    mat = np.zeros((h * w, h * w))
    for i in range(h):
        for j in range(w):
            row = i * w + j
            for a in range(kh):
                for b in range(kw):
                    src = ((i - a + ch) % h) * w + (j - b + cw) % w
                    mat[row, src] += k[a, b]
    return mat


def decimation_matrix(shape, s: int) -> np.ndarray:
    """Selects the upper-left pixel of every ``s x s`` patch."""
    h, w = shape
    lh, lw = h // s, w // s
    mat = np.zeros((lh * lw, h * w))
    for i in range(lh):
        for j in range(lw):
            mat[i * lw + j, (s * i) * w + s * j] = 1.0
    return mat


def degradation_matrix(kernel, shape, s: int) -> np.ndarray:
    return decimation_matrix(shape, s) @ convolution_matrix(kernel, shape)


def data_step_oracle(x_prev, y, kernel, s: int, alpha: float) -> np.ndarray:
    """Dense reference: solve ``(A^T A + alpha I) z = A^T y + alpha x_prev``."""
    x_prev = as_image(x_prev)
    y = as_image(y)
    _check_shapes(x_prev, y, s)
    h, w = x_prev.shape[:2]
    if h > ORACLE_MAX_SIDE or w > ORACLE_MAX_SIDE:
        raise ValueError(f"dense oracle is capped at {ORACLE_MAX_SIDE}x{ORACLE_MAX_SIDE}")
    alpha = _check_alpha(alpha)
    a = degradation_matrix(kernel, (h, w), s)
    lhs = a.T @ a + alpha * np.eye(h * w)
    xs = x_prev.reshape(h * w, -1)
    ys = y.reshape(a.shape[0], -1)
    z = np.linalg.solve(lhs, a.T @ ys + alpha * xs)
    return z.reshape(x_prev.shape)


def wiener_deblur(y, kernel, alpha: float, x_anchor) -> np.ndarray:
    """Scale-1 data step written as a regularized Wiener filter."""
    y = as_image(y)
    x_anchor = as_image(x_anchor)
    if y.shape != x_anchor.shape:
        raise ValueError("y and the anchor image must have equal shapes")
    alpha = _check_alpha(alpha)
    otf = psf2otf(kernel, y.shape[:2])
    if y.ndim == 3:
        otf = otf[..., None]
    num = np.conj(otf) * fft2(y) + alpha * fft2(x_anchor)
    return ifft2(num / (np.abs(otf) ** 2 + alpha))


def data_objective(z, x_prev, y, kernel, s: int, alpha: float) -> float:
    from .degradation import blur_downsample

    r = as_image(y) - blur_downsample(z, kernel, s)
    return float(np.sum(r ** 2) + alpha * np.sum((as_image(z) - as_image(x_prev)) ** 2))

"""Equivalent classical-model kernels for linear downscalers.

A bicubic downscaler samples output pixel ``i`` at input coordinate
``s*i + (s-1)/2``, while the classical model keeps pixel ``s*i``. The kernel
that reconciles the two must therefore carry its mass ``(s-1)/2`` taps
towards the upper-left of its middle tap: 0.5, 1 and 1.5 taps for scales
2, 3 and 4. The cubic convolution weight has negative lobes, so the kernels do too.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .degradation import DegradationSpec, degrade, kernel_center_of_mass
from .imaging import as_image, make_rng

log = logging.getLogger(__name__)

CUBIC_A = -0.5


class RankDeficiencyWarning(UserWarning):
    """The normal equations are close to singular (flat training content)."""


def cubic_weight(t, a: float = CUBIC_A) -> np.ndarray:
    t = np.abs(np.asarray(t, dtype=np.float64))
    t2, t3 = t * t, t * t * t
    near = (a + 2) * t3 - (a + 3) * t2 + 1
    far = a * t3 - 5 * a * t2 + 8 * a * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


def _reflect(idx: np.ndarray, n: int) -> np.ndarray:
    # half-sample symmetric extension: -1 -> 0, n -> n-1
    period = 2 * n
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - 1 - idx, idx)


def _contributions(n_in: int, s: int):
    """Tap indices and weights of the anti-aliased bicubic along one axis."""
    n_out = n_in // s
    centers = s * np.arange(n_out) + (s - 1) / 2.0
    support = 2 * s
    offsets = np.arange(-support, support + 1)
    taps = np.floor(centers)[:, None].astype(int) + offsets[None, :]
    weights = cubic_weight((taps - centers[:, None]) / s) / s
    weights /= weights.sum(axis=1, keepdims=True)
    return _reflect(taps, n_in), weights


def bicubic_downsample(x, s: int) -> np.ndarray:
    """Downscale by ``s`` with the cubic convolution weight (a = -0.5), stretched by ``s``.

    Output pixel ``i`` sits at input coordinate ``s*i + (s-1)/2``; borders
    use half-sample symmetric extension.
    """
    if s not in (2, 3, 4):
        raise ValueError(f"bicubic scale must be 2, 3 or 4, got {s}")
    x = as_image(x)
    h, w = x.shape[:2]
    if h % s or w % s:
        raise ValueError(f"image size {h}x{w} is not divisible by scale {s}")
    rows, rw = _contributions(h, s)
    cols, cw = _contributions(w, s)
    tmp = np.einsum("ik,ik...->i...", rw, x[rows])
    return np.einsum("jk,ijk...->ij...", cw, tmp[:, cols])


def _patch_matrix(hr: np.ndarray, s: int, ksize: int, margin: str):
    """Rows map kernel taps to LR samples: ``lr[i, j] = A[(i, j)] @ k.ravel()``.

    Tap ``(a, b)`` multiplies ``hr[s*i - a + c, s*j - b + c]`` with
    ``c = ksize // 2``; that is circular convolution followed by upper-left
    decimation. ``margin="valid"`` keeps only LR pixels whose footprint
    does not wrap around the border.
    """
    c = ksize // 2
    h, w = hr.shape
    padded = np.pad(hr, ((c, c), (c, c)), mode="wrap")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (ksize, ksize))
    # windows[p, q, u, v] = hr[p + u - c, q + v - c]; flip u, v to get taps (a, b)
    lr_rows = np.arange(0, h, s)
    lr_cols = np.arange(0, w, s)
    keep_r = np.ones(lr_rows.size, bool)
    keep_c = np.ones(lr_cols.size, bool)
    if margin == "valid":
        keep_r = (lr_rows - c >= 0) & (lr_rows + c < h)
        keep_c = (lr_cols - c >= 0) & (lr_cols + c < w)
    sel = windows[lr_rows[keep_r]][:, lr_cols[keep_c]][:, :, ::-1, ::-1]
    return sel.reshape(-1, ksize * ksize), keep_r, keep_c


@dataclass(frozen=True)
class KernelEstimate:
    kernel: np.ndarray
    rmse: float
    center_of_mass: tuple[float, float]
    n_samples: int


def estimate_equivalent_kernel(pairs, s: int, ksize: int = 25, damping: float = 1e-8,
                               margin: str = "valid") -> KernelEstimate:
    """Least-squares kernel ``k`` minimizing ``sum ||(hr conv k) down s - lr||^2``.

    The normal equations are accumulated pair by pair (and channel by
    channel) and solved with Tikhonov damping ``damping * trace / n``.
    With ``margin="valid"`` only LR pixels unaffected by image borders enter
    the fit, so downscalers with non-periodic boundary handling are matched
    on their interior.
    """
    if ksize % 2 != 1:
        raise ValueError("kernel size must be odd")
    if margin not in ("valid", "full"):
        raise ValueError("margin must be 'valid' or 'full'")
    n = ksize * ksize
    gram = np.zeros((n, n))
    rhs = np.zeros(n)
    yy = 0.0
    count = 0
    for hr, lr in pairs:
        hr = as_image(hr)
        lr = as_image(lr)
        if hr.shape[0] != lr.shape[0] * s or hr.shape[1] != lr.shape[1] * s:
            raise ValueError(f"LR shape {lr.shape} is not HR shape {hr.shape} / {s}")
        if hr.ndim == 2:
            hr, lr = hr[..., None], lr[..., None]
        for ch in range(hr.shape[2]):
            a, keep_r, keep_c = _patch_matrix(hr[..., ch], s, ksize, margin)
            b = lr[..., ch][np.ix_(keep_r, keep_c)].ravel()
            gram += a.T @ a
            rhs += a.T @ b
            yy += float(b @ b)
            count += b.size
    if count == 0:
        raise ValueError("no usable LR samples; images are too small for the kernel size")

    eig = np.linalg.eigvalsh(gram)
    if eig[-1] <= 0 or eig[0] / eig[-1] < 1e-12:
        warnings.warn("kernel estimation system is nearly rank-deficient; "
                      "use images with more texture", RankDeficiencyWarning, stacklevel=2)
    reg = damping * np.trace(gram) / n
    k = np.linalg.solve(gram + reg * np.eye(n), rhs)
    sse = max(yy - 2 * k @ rhs + k @ gram @ k, 0.0)
    rmse = float(np.sqrt(sse / count))
    kernel = k.reshape(ksize, ksize)
    com = kernel_center_of_mass(kernel)
    log.info("estimated %dx%d kernel: rmse=%.3e, center=(%.3f, %.3f)", ksize, ksize, rmse, *com)
    return KernelEstimate(kernel=kernel, rmse=rmse, center_of_mass=com, n_samples=count)


def reapply_kernel(hr, kernel, s: int) -> np.ndarray:
    """Noise-free :func:`degrade` of ``hr`` extended by mirroring.

    Periodic wrap would compare the two downscalers under different border
    rules; extending ``hr`` with the half-sample symmetric boundary of
    :func:`bicubic_downsample` (by a multiple of ``s`` covering the kernel
    radius) and cropping the LR result compares them all the way to the
    border.
    """
    hr = as_image(hr)
    k = np.asarray(kernel, dtype=np.float64)
    p = -(-(max(k.shape) // 2) // s)  # LR pixels of padding
    pad = ((p * s, p * s), (p * s, p * s)) + ((0, 0),) * (hr.ndim - 2)
    lr = degrade(np.pad(hr, pad, mode="symmetric"), DegradationSpec(s, k, 0.0), make_rng(0))
    return lr[p:lr.shape[0] - p, p:lr.shape[1] - p]


def bicubic_upsample(y, s: int) -> np.ndarray:
    """Cubic interpolation by ``s`` with HR pixel ``j`` at LR coordinate ``j / s``.

    This is the alignment of the classical model, so HR pixels ``s*i`` reproduce
    the LR samples exactly. Borders replicate the edge pixels.
    """
    y = as_image(y)
    if int(s) != s or s < 1:
        raise ValueError(f"scale factor must be a positive integer, got {s!r}")
    out = y
    for axis in (0, 1):
        n = out.shape[axis]
        coords = np.arange(n * s) / s
        base = np.floor(coords).astype(int)
        taps = base[:, None] + np.arange(-1, 3)[None, :]
        weights = cubic_weight(coords[:, None] - taps)
        taps = np.clip(taps, 0, n - 1)
        moved = np.moveaxis(out, axis, 0)
        res = np.einsum("ik,ik...->i...", weights, moved[taps])
        out = np.moveaxis(res, 0, axis)
    return out

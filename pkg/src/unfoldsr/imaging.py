"""Raster primitives shared by the whole pipeline.

Images are plain ``numpy`` arrays of shape ``(H, W)`` or ``(H, W, C)`` holding
float64 intensities in ``[0, 1]``. Every spatial operation acts on the two
leading axes, so channel-last color images and single planes are handled
by the same code.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

#: Returned by :func:`psnr` when the two images agree exactly.
PSNR_IDENTICAL = math.inf


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator (PCG64); streams are identical across platforms."""
    return np.random.Generator(np.random.PCG64(seed))


def as_image(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError(f"expected an (H, W) or (H, W, C) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite samples")
    return img


def _check_scale(s: int) -> int:
    if int(s) != s or s < 1:
        raise ValueError(f"scale factor must be a positive integer, got {s!r}")
    return int(s)


def nearest_upsample(img, s: int) -> np.ndarray:
    """Replicate every pixel into an ``s x s`` block."""
    s = _check_scale(s)
    img = as_image(img)
    return np.repeat(np.repeat(img, s, axis=0), s, axis=1)


def standard_downsample(img, s: int) -> np.ndarray:
    """Keep the upper-left pixel of every distinct ``s x s`` patch."""
    s = _check_scale(s)
    img = as_image(img)
    h, w = img.shape[:2]
    if h % s or w % s:
        raise ValueError(f"image size {h}x{w} is not divisible by scale {s}")
    return img[::s, ::s].copy()


def zero_upsample(img, s: int) -> np.ndarray:
    """Place samples on the ``s``-strided lattice, zeros elsewhere."""
    s = _check_scale(s)
    img = as_image(img)
    out = np.zeros((img.shape[0] * s, img.shape[1] * s) + img.shape[2:])
    out[::s, ::s] = img
    return out


def add_awgn(img, sigma255: float, rng: np.random.Generator) -> np.ndarray:
    """Add white Gaussian noise with std ``sigma255 / 255``."""
    if sigma255 < 0:
        raise ValueError("noise level must be non-negative")
    img = as_image(img)
    if sigma255 == 0:
        return img.copy()
    return img + rng.normal(0.0, sigma255 / 255.0, size=img.shape)


def _overlap(a: np.ndarray, b: np.ndarray, dy: int, dx: int):
    h, w = a.shape[:2]
    a_rows = slice(max(dy, 0), h + min(dy, 0))
    b_rows = slice(max(-dy, 0), h + min(-dy, 0))
    a_cols = slice(max(dx, 0), w + min(dx, 0))
    b_cols = slice(max(-dx, 0), w + min(-dx, 0))
    return a[a_rows, a_cols], b[b_rows, b_cols]


def psnr(a, b, shift_search: int = 0) -> float:
    """PSNR in dB for unit-range images, maximized over integer shifts.

    All channels share one MSE. With ``shift_search = r`` every translation
    in ``[-r, r]^2`` is tried and the MSE is taken over the overlapping
    region only. Identical images give :data:`PSNR_IDENTICAL`.
    """
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if shift_search < 0:
        raise ValueError("shift_search must be >= 0")
    r = int(shift_search)
    if r >= min(a.shape[:2]):
        raise ValueError("shift search radius leaves no overlap")
    best_mse = math.inf
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            pa, pb = _overlap(a, b, dy, dx)
            best_mse = min(best_mse, float(np.mean((pa - pb) ** 2)))
    if best_mse == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(1.0 / best_mse)


def crop_to_multiple(img, m: int) -> np.ndarray:
    """Center-crop so both spatial sizes are multiples of ``m``."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    nh, nw = h - h % m, w - w % m
    if nh == 0 or nw == 0:
        raise ValueError(f"image {h}x{w} is smaller than {m}")
    top, left = (h - nh) // 2, (w - nw) // 2
    return img[top:top + nh, left:left + nw]


def read_png(path) -> np.ndarray:
    """Read an 8- or 16-bit PNG into ``[0, 1]`` floats (RGB order)."""
    import cv2

    if not Path(path).is_file():
        raise FileNotFoundError(f"no such image: {path}")
    data = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise OSError(f"cannot read image {path}")
    if data.dtype == np.uint8:
        peak = 255.0
    elif data.dtype == np.uint16:
        peak = 65535.0
    else:
        raise ValueError(f"unsupported PNG sample type {data.dtype}")
    if data.ndim == 3:
        if data.shape[2] == 4:
            data = data[..., :3]
        data = data[..., ::-1]
    return data.astype(np.float64) / peak


def write_png(path, img, bits: int = 8) -> None:
    """Clamp to ``[0, 1]`` and write an 8- or 16-bit PNG."""
    import cv2

    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    img = np.clip(as_image(img), 0.0, 1.0)
    peak, dtype = (255.0, np.uint8) if bits == 8 else (65535.0, np.uint16)
    data = np.rint(img * peak).astype(dtype)
    if data.ndim == 3:
        if data.shape[2] == 1:
            data = data[..., 0]
        else:
            data = np.ascontiguousarray(data[..., ::-1])
    if not cv2.imwrite(str(path), data):
        raise OSError(f"cannot write image {path}")

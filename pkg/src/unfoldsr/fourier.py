"""FFT plumbing and the block-structured spectral operators.

Transforms act on the two leading axes; trailing axes (channels) ride along.
Forward transforms are unnormalized, the inverse carries ``1/(HW)``.
"""

from __future__ import annotations

import numpy as np

IMAG_TOLERANCE = 1e-8


class SpectralResidueError(RuntimeError):
    """The inverse transform of a field that should be Hermitian was not real."""


def fft2(plane) -> np.ndarray:
    return np.fft.fft2(np.asarray(plane, dtype=np.float64), axes=(0, 1))


def ifft2(field) -> np.ndarray:
    """Inverse transform, returning the real part.

    Raises :class:`SpectralResidueError` if the imaginary residue exceeds
    ``1e-8`` relative to the real part, which signals a broken conjugate
    symmetry upstream.
    """
    out = np.fft.ifft2(field, axes=(0, 1))
    scale = max(float(np.max(np.abs(out.real), initial=0.0)), 1e-300)
    residue = float(np.max(np.abs(out.imag), initial=0.0))
    if residue > IMAG_TOLERANCE * scale and residue > 1e-300:
        raise SpectralResidueError(
            f"imaginary residue {residue:.3e} exceeds tolerance (real scale {scale:.3e})"
        )
    return out.real


def psf2otf(kernel, shape) -> np.ndarray:
    """Transfer function of ``kernel`` on an ``shape`` grid.

    The kernel is zero-padded and rolled so that its tap ``(kh // 2, kw // 2)``
    lands at the origin; multiplying spectra then performs circular
    convolution with the kernel.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError("kernel must be 2-D")
    h, w = int(shape[0]), int(shape[1])
    kh, kw = k.shape
    if kh > h or kw > w:
        raise ValueError(f"kernel {kh}x{kw} is larger than the {h}x{w} grid")
    pad = np.zeros((h, w))
    pad[:kh, :kw] = k
    pad = np.roll(pad, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.fft2(pad)


def _split_dims(shape, s: int):
    if int(s) != s or s < 1:
        raise ValueError(f"scale factor must be a positive integer, got {s!r}")
    big_h, big_w = shape[:2]
    if big_h % s or big_w % s:
        raise ValueError(f"field size {big_h}x{big_w} is not divisible by {s}")
    return big_h // s, big_w // s


def block_downsample(field, s: int) -> np.ndarray:
    """Mean of the ``s x s`` grid of contiguous ``H x W`` tiles."""
    f = np.asarray(field)
    h, w = _split_dims(f.shape, s)
    tiles = f.reshape((s, h, s, w) + f.shape[2:])
    return tiles.mean(axis=(0, 2))


def block_multiply(field, g, s: int) -> np.ndarray:
    """Multiply every contiguous ``H x W`` tile of ``field`` by ``g``."""
    f = np.asarray(field)
    g = np.asarray(g)
    h, w = _split_dims(f.shape, s)
    if g.shape[:2] != (h, w):
        raise ValueError(f"block factor shape {g.shape[:2]} does not match tile {(h, w)}")
    reps = (s, s) + (1,) * (g.ndim - 2)
    return f * np.tile(g, reps)

"""The unfolded iteration and boundary pre-processing for real LR images."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data_step import DataStep
from .degradation import DegradationSpec, circular_convolve
from .imaging import as_image, nearest_upsample, standard_downsample
from .kernel_estimation import bicubic_upsample
from .schedule import HyperSchedule

log = logging.getLogger(__name__)


@dataclass
class Trace:
    """Intermediate estimates ``z_1, x_1, ..., z_K, x_K`` of one run."""

    x0: np.ndarray
    z: list = field(default_factory=list)
    x: list = field(default_factory=list)

    def steps(self):
        """``("z", k, img)`` and ``("x", k, img)`` in execution order."""
        for k, (zk, xk) in enumerate(zip(self.z, self.x), start=1):
            yield "z", k, zk
            yield "x", k, xk


def unfold_sr(y, spec: DegradationSpec, prior, schedule: HyperSchedule, *,
              x0=None, trace: Trace | bool = False, clip: bool = True):
    """Alternate ``K`` closed-form data steps with ``K`` prior steps.

    ``x0`` defaults to nearest-neighbour upsampling of ``y``. Intensities are
    left unconstrained between iterations and clamped to ``[0, 1]`` only on
    return (``clip=False`` skips that). With ``trace=True`` a ``(x_K, Trace)``
    pair is returned.
    """
    y = as_image(y)
    s = spec.scale
    step = DataStep(y, spec.kernel, s)
    x = nearest_upsample(y, s) if x0 is None else as_image(x0).copy()
    rec = None
    if trace:
        rec = trace if isinstance(trace, Trace) else Trace(x0=x.copy())
    for k, (alpha, beta) in enumerate(schedule, start=1):
        z = step(x, alpha)
        x = prior.denoise(z, beta)
        if rec is not None:
            rec.z.append(z)
            rec.x.append(x)
        log.debug("iteration %d: alpha=%.3e beta=%.3e", k, alpha, beta)
    out = np.clip(x, 0.0, 1.0) if clip else x
    return (out, rec) if rec is not None else out


def border_pad_width(kernel, s: int) -> int:
    """LR pixels added on each side by :func:`preprocess_real_lr`."""
    kh, kw = np.shape(kernel)
    return math.ceil(max(kh, kw) / (2 * s))


def taper_window(kernel, shape) -> np.ndarray:
    """Blending weights from the kernel's autocorrelation.

    Along each axis the weight is one minus the normalized circular
    autocorrelation of the kernel's projection: 0 at the grid border, 1 once
    the lag exceeds the kernel extent. The 2-D window is the outer product.
    """
    k = np.asarray(kernel, dtype=np.float64)
    window = np.ones(shape[:2])
    for axis, n in enumerate(shape[:2]):
        proj = k.sum(axis=1 - axis)
        spectrum = np.fft.fft(proj, n)
        ac = np.real(np.fft.ifft(np.abs(spectrum) ** 2))
        ac /= ac.max()
        weights = 1.0 - ac
        window *= weights[:, None] if axis == 0 else weights[None, :]
    return window


def edgetaper(img, kernel) -> np.ndarray:
    img = as_image(img)
    w = taper_window(kernel, img.shape)
    if img.ndim == 3:
        w = w[..., None]
    return w * img + (1.0 - w) * circular_convolve(img, kernel)


def preprocess_real_lr(y, kernel, s: int) -> np.ndarray:
    """Pad ``y`` with a border band that suits the periodic forward model.

    The LR image is edge-padded by :func:`border_pad_width` pixels, cubically
    interpolated to HR size, edge-tapered with the kernel, and the tapered
    image's decimated border band replaces the padding. Pixels of ``y``
    itself are never changed.
    """
    y = as_image(y)
    p = border_pad_width(kernel, s)
    pad = ((p, p), (p, p)) + ((0, 0),) * (y.ndim - 2)
    padded = np.pad(y, pad, mode="edge")
    hr = bicubic_upsample(padded, s)
    band = standard_downsample(edgetaper(hr, kernel), s)
    out = band.copy()
    out[p:p + y.shape[0], p:p + y.shape[1]] = y
    return out


def super_resolve(y, spec: DegradationSpec, prior, schedule: HyperSchedule, *,
                  boundary: str = "circular", trace: Trace | bool = False, clip: bool = True):
    """:func:`unfold_sr`, optionally wrapped in boundary pre-processing.

    ``boundary="taper"`` pads ``y`` with :func:`preprocess_real_lr` and crops the
    matching HR border from the result (and from any trace).
    """
    if boundary == "circular":
        return unfold_sr(y, spec, prior, schedule, trace=trace, clip=clip)
    if boundary != "taper":
        raise ValueError(f"unknown boundary mode {boundary!r}")
    y = as_image(y)
    p = border_pad_width(spec.kernel, spec.scale) * spec.scale
    res = unfold_sr(preprocess_real_lr(y, spec.kernel, spec.scale), spec, prior, schedule,
                    trace=trace, clip=clip)
    h, w = y.shape[0] * spec.scale, y.shape[1] * spec.scale

    def crop(img):
        return img[p:p + h, p:p + w]

    if isinstance(res, tuple):
        x, rec = res
        rec.x0 = crop(rec.x0)
        rec.z = [crop(z) for z in rec.z]
        rec.x = [crop(v) for v in rec.x]
        return crop(x), rec
    return crop(res)

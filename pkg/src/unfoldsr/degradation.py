"""Classical degradation model and blur kernel generators.

``y = (x conv k) downsampled by s + n``: circular convolution, upper-left
decimation, white Gaussian noise.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fourier import fft2, ifft2, psf2otf
from .imaging import add_awgn, as_image, standard_downsample, zero_upsample

KERNEL_MAGIC = b"KRN1"
KERNEL_FORMAT_VERSION = 1
SCALES = (1, 2, 3, 4)
MAX_SIGMA255 = 25.0


def as_kernel(k, normalized: bool = True) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError(f"kernel must be 2-D, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel contains non-finite weights")
    if normalized and abs(k.sum() - 1.0) > 1e-6:
        raise ValueError(f"kernel weights sum to {k.sum():.8f}, expected 1")
    return k


@dataclass(frozen=True)
class DegradationSpec:
    scale: int
    kernel: np.ndarray
    sigma255: float = 0.0

    def __post_init__(self):
        if self.scale not in SCALES:
            raise ValueError(f"scale must be one of {SCALES}, got {self.scale}")
        if not 0.0 <= self.sigma255 <= MAX_SIGMA255:
            raise ValueError(f"noise level must lie in [0, {MAX_SIGMA255}], got {self.sigma255}")
        object.__setattr__(self, "kernel", as_kernel(self.kernel))


def circular_convolve(x, kernel) -> np.ndarray:
    """Convolve each channel with ``kernel`` under periodic boundaries."""
    x = as_image(x)
    k = np.asarray(kernel, dtype=np.float64)
    taps = np.flatnonzero(k)
    if taps.size == 1:
        # a scaled, shifted delta: exact without a round trip through the FFT
        a, b = np.unravel_index(taps[0], k.shape)
        psf2otf(k, x.shape[:2])  # same size checks as the general path
        return k[a, b] * np.roll(x, (a - k.shape[0] // 2, b - k.shape[1] // 2), axis=(0, 1))
    otf = psf2otf(kernel, x.shape[:2])
    if x.ndim == 3:
        otf = otf[..., None]
    return ifft2(otf * fft2(x))


def blur_downsample(x, kernel, s: int) -> np.ndarray:
    """Noise-free part of the forward model."""
    return standard_downsample(circular_convolve(x, kernel), s)


def blur_downsample_adjoint(u, kernel, s: int) -> np.ndarray:
    """Adjoint of :func:`blur_downsample`: zero-upsample, then correlate."""
    up = zero_upsample(u, s)
    otf = psf2otf(kernel, up.shape[:2])
    if up.ndim == 3:
        otf = otf[..., None]
    return ifft2(np.conj(otf) * fft2(up))


def degrade(x, spec: DegradationSpec, rng: np.random.Generator) -> np.ndarray:
    x = as_image(x)
    h, w = x.shape[:2]
    if h % spec.scale or w % spec.scale:
        raise ValueError(f"image size {h}x{w} is not divisible by scale {spec.scale}")
    return add_awgn(blur_downsample(x, spec.kernel, spec.scale), spec.sigma255, rng)


def gaussian_kernel(size: int = 25, sigma_x: float = 1.6, sigma_y: float | None = None,
                    theta: float = 0.0) -> np.ndarray:
    """Sampled bivariate Gaussian rotated by ``theta``, normalized to sum 1.

    ``sigma_x`` is the standard deviation along the column axis before
    rotation, ``sigma_y`` along the row axis.
    """
    if size % 2 != 1 or size < 1:
        raise ValueError("kernel size must be odd")
    sigma_y = sigma_x if sigma_y is None else sigma_y
    if sigma_x <= 0 or sigma_y <= 0:
        raise ValueError("Gaussian widths must be positive")
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    cov = rot @ np.diag([sigma_x ** 2, sigma_y ** 2]) @ rot.T
    prec = np.linalg.inv(cov)
    r = np.arange(size) - size // 2
    rows, cols = np.meshgrid(r, r, indexing="ij")
    # (col, row) = (x, y)
    q = prec[0, 0] * cols ** 2 + 2 * prec[0, 1] * cols * rows + prec[1, 1] * rows ** 2
    k = np.exp(-0.5 * q)
    return k / k.sum()


def motion_kernel(size: int = 25, steps: int = 64, rng: np.random.Generator | None = None,
                  inertia: float = 0.8) -> np.ndarray:
    """Random camera-shake trajectory rasterized onto a ``size x size`` grid.

    The velocity follows an inertial random walk; points are splatted
    bilinearly, which keeps the kernel's center of mass at the trajectory
    mean, and the trajectory is recentered on the middle tap.
    """
    if size % 2 != 1:
        raise ValueError("kernel size must be odd")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    center = size // 2
    if steps == 1:
        k = np.zeros((size, size))
        k[center, center] = 1.0
        return k

    pos = np.zeros((steps, 2))
    vel = rng.normal(size=2)
    vel /= np.linalg.norm(vel) + 1e-12
    for i in range(1, steps):
        vel = inertia * vel + (1.0 - inertia) * rng.normal(size=2) * 2.0
        speed = np.linalg.norm(vel)
        if speed > 0:
            vel /= speed
        pos[i] = pos[i - 1] + vel * rng.uniform(0.5, 1.0)

    # dense resampling of the polyline keeps the streak connected
    t = np.linspace(0.0, 1.0, 8 * (steps - 1) + 1)
    seg = np.linspace(0.0, 1.0, steps)
    path = np.stack([np.interp(t, seg, pos[:, 0]), np.interp(t, seg, pos[:, 1])], axis=1)
    path -= path.mean(axis=0)
    extent = np.max(np.abs(path))
    limit = center - 1.0
    if extent > limit > 0:
        path *= limit / extent
    path += center

    k = np.zeros((size, size))
    r0 = np.floor(path[:, 0]).astype(int)
    c0 = np.floor(path[:, 1]).astype(int)
    fr = path[:, 0] - r0
    fc = path[:, 1] - c0
    np.add.at(k, (r0, c0), (1 - fr) * (1 - fc))
    np.add.at(k, (r0 + 1, c0), fr * (1 - fc))
    np.add.at(k, (r0, c0 + 1), (1 - fr) * fc)
    np.add.at(k, (r0 + 1, c0 + 1), fr * fc)
    return k / k.sum()


def delta_kernel(size: int = 1) -> np.ndarray:
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return k


def kernel_center_of_mass(k) -> tuple[float, float]:
    k = as_kernel(k, normalized=False)
    total = k.sum()
    if abs(total) < 1e-12:
        raise ValueError("kernel weights sum to zero")
    rows, cols = np.indices(k.shape)
    return float((k * rows).sum() / total), float((k * cols).sum() / total)


def write_kernel(path, k) -> None:
    k = as_kernel(k, normalized=False)
    h, w = k.shape
    with open(path, "wb") as fh:
        fh.write(KERNEL_MAGIC)
        fh.write(struct.pack("<II", h, w))
        fh.write(k.astype("<f8").tobytes())


def read_kernel(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != KERNEL_MAGIC:
        raise ValueError(f"{path}: not a kernel file (bad magic)")
    if len(raw) < 12:
        raise ValueError(f"{path}: truncated kernel header")
    h, w = struct.unpack("<II", raw[4:12])
    payload = raw[12:]
    if len(payload) != 8 * h * w:
        raise ValueError(f"{path}: expected {h}x{w} weights, found {len(payload)} bytes")
    return np.frombuffer(payload, dtype="<f8").reshape(h, w).astype(np.float64)


BENCHMARK_KERNEL_SIZE = 25

# (kind, parameters); anisotropic widths are (sigma_x, sigma_y, theta), motion
# entries are generator seeds.
BENCHMARK_KERNELS = {
    "iso_0.7": ("gaussian", (0.7, 0.7, 0.0)),
    "iso_1.2": ("gaussian", (1.2, 1.2, 0.0)),
    "iso_1.6": ("gaussian", (1.6, 1.6, 0.0)),
    "iso_2.0": ("gaussian", (2.0, 2.0, 0.0)),
    "aniso_1": ("gaussian", (2.0, 0.8, 0.0)),
    "aniso_2": ("gaussian", (2.8, 1.2, math.pi / 4)),
    "aniso_3": ("gaussian", (3.2, 1.6, 2 * math.pi / 3)),
    "aniso_4": ("gaussian", (2.4, 0.7, 3 * math.pi / 4)),
    "motion_1": ("motion", 1),
    "motion_2": ("motion", 2),
    "motion_3": ("motion", 3),
    "motion_4": ("motion", 4),
}


def generate_benchmark_kernel(kernel_id: str) -> np.ndarray:
    kind, params = BENCHMARK_KERNELS[kernel_id]
    if kind == "gaussian":
        sx, sy, theta = params
        return gaussian_kernel(BENCHMARK_KERNEL_SIZE, sx, sy, theta)
    return motion_kernel(BENCHMARK_KERNEL_SIZE, 64, np.random.default_rng(params))


def load_benchmark_kernel(kernel_id: str) -> np.ndarray:
    """Frozen copy of a benchmark kernel shipped with the package."""
    from importlib import resources

    if kernel_id not in BENCHMARK_KERNELS:
        raise KeyError(f"unknown benchmark kernel {kernel_id!r}")
    ref = resources.files("unfoldsr.data").joinpath("kernels", f"{kernel_id}.krn")
    with resources.as_file(ref) as path:
        return read_kernel(path)

"""PSNR benchmark over a kernel x scale x noise grid.

Every LR input is synthesized with a seed derived from the image name and
the cell, so each cell can be recomputed from the configuration alone.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .degradation import BENCHMARK_KERNELS, DegradationSpec, degrade, load_benchmark_kernel
from .imaging import crop_to_multiple, nearest_upsample, psnr, read_png
from .kernel_estimation import bicubic_upsample
from .priors.resunet import ResUNetPrior
from .priors.tv import IdentityPrior, TVPrior
from .priors.weights import load_weights
from .schedule import DEFAULT_BETA_START255, DEFAULT_ITERS, DEFAULT_LAMBDA, analytic_schedule
from .solver import unfold_sr

log = logging.getLogger(__name__)

DEFAULT_SCALES = (2, 3, 4)
DEFAULT_NOISES = (0.0, 2.55, 7.65)
DEFAULT_METHODS = ("nearest-upsample", "bicubic-upsample", "data-only", "usr-tv")
CROP_MULTIPLE = 12


class BenchFailure(UserWarning):
    """One image of one cell failed and was left out of the average."""


@dataclass(frozen=True)
class BenchRow:
    method: str
    scale: int
    sigma255: float
    kernel_id: str
    psnr_db: float
    runtime_ms: float
    n_images: int


@dataclass(frozen=True)
class BenchConfig:
    kernels: tuple[str, ...] = tuple(BENCHMARK_KERNELS)
    scales: tuple[int, ...] = DEFAULT_SCALES
    noises: tuple[float, ...] = DEFAULT_NOISES
    methods: tuple[str, ...] = DEFAULT_METHODS
    seed: int = 0
    shift_radius: int = 2
    iters: int = DEFAULT_ITERS
    beta_start255: float = DEFAULT_BETA_START255
    lambda_: float = DEFAULT_LAMBDA
    tv_scale: float = 0.5
    tv_iters: int = 30
    crop: int | None = None
    weights: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown bench config keys: {', '.join(sorted(unknown))}")
        conv = {}
        for key, value in data.items():
            if key in ("kernels", "methods"):
                value = tuple(str(v) for v in value)
            elif key == "scales":
                value = tuple(int(v) for v in value)
            elif key == "noises":
                value = tuple(float(v) for v in value)
            conv[key] = value
        return cls(**conv)

    def with_overrides(self, **overrides) -> "BenchConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config(path) -> BenchConfig:
    """Read a TOML bench configuration (keys mirror :class:`BenchConfig`)."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return BenchConfig.from_mapping(tomllib.load(fh))


# -- methods ---------------------------------------------------------------

def _schedule(spec, cfg):
    return analytic_schedule(spec.sigma255, spec.scale, cfg.iters, cfg.beta_start255, cfg.lambda_)


def _nearest(y, spec, cfg):
    return nearest_upsample(y, spec.scale)


def _bicubic(y, spec, cfg):
    return np.clip(bicubic_upsample(y, spec.scale), 0.0, 1.0)


def _data_only(y, spec, cfg):
    return unfold_sr(y, spec, IdentityPrior(), _schedule(spec, cfg))


def _usr_tv(y, spec, cfg):
    prior = TVPrior(tv_scale=cfg.tv_scale, iters=cfg.tv_iters)
    return unfold_sr(y, spec, prior, _schedule(spec, cfg))


_CNN_CACHE: dict = {}


def _usr_cnn(y, spec, cfg):
    if cfg.weights is None:
        raise ValueError("usr-cnn needs a weights file")
    if cfg.weights not in _CNN_CACHE:
        _CNN_CACHE[cfg.weights] = ResUNetPrior(load_weights(cfg.weights))
    return unfold_sr(y, spec, _CNN_CACHE[cfg.weights], _schedule(spec, cfg))


METHODS = {
    "nearest-upsample": _nearest,
    "bicubic-upsample": _bicubic,
    "data-only": _data_only,
    "usr-tv": _usr_tv,
    "usr-cnn": _usr_cnn,
}


def baseline_methods(with_weights: bool = False) -> list[str]:
    names = ["nearest-upsample", "bicubic-upsample", "data-only", "usr-tv"]
    if with_weights:
        names.append("usr-cnn")
    return names


# -- harness -----------------------------------------------------------------

def load_dataset(dataset_dir) -> list[tuple[str, np.ndarray]]:
    paths = sorted(Path(dataset_dir).glob("*.png"))
    if not paths:
        raise ValueError(f"no PNG images in {dataset_dir}")
    return [(p.name, read_png(p)) for p in paths]


def cell_seed(base_seed: int, image_name: str, kernel_id: str, scale: int, sigma255: float) -> int:
    key = f"{image_name}|{kernel_id}|{scale}|{sigma255!r}".encode()
    return int(np.random.SeedSequence([base_seed, zlib.crc32(key)]).generate_state(1)[0])


def _center_crop(img, side):
    h, w = img.shape[:2]
    side_h, side_w = min(side, h), min(side, w)
    top, left = (h - side_h) // 2, (w - side_w) // 2
    return img[top:top + side_h, left:left + side_w]


def _prepare(img, cfg):
    if cfg.crop:
        img = _center_crop(img, cfg.crop)
    return crop_to_multiple(img, CROP_MULTIPLE)


@dataclass
class _Task:
    image_name: str
    image: np.ndarray
    kernel_id: str
    scale: int
    sigma255: float
    cfg: BenchConfig
    kernels: dict = field(repr=False, default_factory=dict)


def _run_task(task: _Task):
    """All methods on one (image, kernel, scale, noise) combination."""
    keys = [(m, task.scale, task.sigma255, task.kernel_id, task.image_name) for m in task.cfg.methods]
    try:
        spec = DegradationSpec(task.scale, task.kernels[task.kernel_id], task.sigma255)
        seed = cell_seed(task.cfg.seed, task.image_name, task.kernel_id, task.scale, task.sigma255)
        y = degrade(task.image, spec, np.random.default_rng(seed))
    except Exception as exc:  # cannot synthesize the input: every method fails
        msg = f"degradation failed: {type(exc).__name__}: {exc}"
        return [(key, math.nan, math.nan, msg) for key in keys]
    results = []
    for method, key in zip(task.cfg.methods, keys):
        try:
            start = time.perf_counter()
            out = METHODS[method](y, spec, task.cfg)
            elapsed = 1000.0 * (time.perf_counter() - start)
            if out.shape != task.image.shape:
                raise ValueError(f"output shape {out.shape} != ground truth {task.image.shape}")
            results.append((key, psnr(out, task.image, task.cfg.shift_radius), elapsed, None))
        except Exception as exc:  # per-image failures are reported, not fatal
            results.append((key, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return results


def run_benchmark(dataset, cfg: BenchConfig | None = None, *, jobs: int = 1,
                  failures: list | None = None, kernels: dict | None = None) -> list[BenchRow]:
    """Average shift-corrected PSNR per (method, scale, noise, kernel) cell.

    ``dataset`` is a directory of PNGs or a list of ``(name, image)`` pairs.
    ``kernels`` maps ids to arrays and defaults to the bundled benchmark
    kernels. Failed images are excluded with a :class:`BenchFailure`
    warning and appended to ``failures`` as ``(cell, image, message)``.
    """
    cfg = cfg or BenchConfig()
    for method in cfg.methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    images = load_dataset(dataset) if isinstance(dataset, (str, Path)) else list(dataset)
    if not images:
        raise ValueError("empty dataset")
    if kernels is None:
        kernels = {kid: load_benchmark_kernel(kid) for kid in cfg.kernels}
    else:
        kernels = {kid: np.asarray(kernels[kid], dtype=np.float64) for kid in cfg.kernels}
    images = [(name, _prepare(np.asarray(img, dtype=np.float64), cfg)) for name, img in images]

    tasks = [
        _Task(name, img, kid, s, float(sigma), cfg, {kid: kernels[kid]})
        for name, img in images
        for kid in cfg.kernels
        for s in cfg.scales
        for sigma in cfg.noises
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_task, tasks))
    else:
        outcomes = [_run_task(t) for t in tasks]

    cells: dict = {}
    for batch in outcomes:
        for (method, s, sigma, kid, name), value, elapsed, error in batch:
            cell = (method, s, sigma, kid)
            if error is not None:
                msg = f"{method} s={s} sigma={sigma} kernel={kid} image={name}: {error}"
                warnings.warn(msg, BenchFailure, stacklevel=2)
                log.warning("excluded %s", msg)
                if failures is not None:
                    failures.append((cell, name, error))
                continue
            cells.setdefault(cell, []).append((name, value, elapsed))

    rows = []
    for cell in sorted(cells):
        entries = sorted(cells[cell])
        values = [v for _, v, _ in entries]
        mean_psnr = math.inf if any(math.isinf(v) for v in values) else float(np.mean(values))
        rows.append(BenchRow(
            method=cell[0], scale=cell[1], sigma255=cell[2], kernel_id=cell[3],
            psnr_db=mean_psnr,
            runtime_ms=float(np.mean([t for _, _, t in entries])),
            n_images=len(entries),
        ))
    return rows


FIELDS = [f.name for f in fields(BenchRow)]


def _fmt(value: float, digits: int) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.{digits}f}"


def rows_to_csv(rows, timing: bool = False) -> str:
    """CSV text with a header naming every :class:`BenchRow` field.

    Runtimes vary between runs; unless ``timing`` is set the ``runtime_ms``
    column is left empty so that reports are byte-for-byte reproducible.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for r in rows:
        writer.writerow([
            r.method, r.scale, f"{r.sigma255:g}", r.kernel_id, _fmt(r.psnr_db, 4),
            _fmt(r.runtime_ms, 1) if timing else "", r.n_images,
        ])
    return buf.getvalue()


def read_csv(text: str) -> list[BenchRow]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(BenchRow(
            method=rec["method"], scale=int(rec["scale"]), sigma255=float(rec["sigma255"]),
            kernel_id=rec["kernel_id"], psnr_db=float(rec["psnr_db"]),
            runtime_ms=float(rec["runtime_ms"]) if rec["runtime_ms"] else math.nan,
            n_images=int(rec["n_images"]),
        ))
    return rows

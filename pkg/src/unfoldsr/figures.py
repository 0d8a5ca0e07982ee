"""Report figures written next to CSV/PNG outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path) -> Path:
    path = Path(path)
    # drop version/date stamps so identical figures give identical bytes
    metadata = {"svg": {"Date": None}, "pdf": {"CreationDate": None}}.get(
        path.suffix.lower().lstrip("."), {"Software": None})
    fig.savefig(path, bbox_inches="tight", metadata=metadata)
    plt.close(fig)
    return path


def plot_bench(rows, path) -> Path:
    """Grouped PSNR bars per kernel, one panel per (scale, noise) pair."""
    scales = sorted({r.scale for r in rows})
    noises = sorted({r.sigma255 for r in rows})
    methods = sorted({r.method for r in rows})
    kernels = sorted({r.kernel_id for r in rows})
    lookup = {(r.method, r.scale, r.sigma255, r.kernel_id): r.psnr_db for r in rows}
    width = 0.8 / max(len(methods), 1)
    with plt.rc_context(RC):
        fig, axes = plt.subplots(len(scales), len(noises), squeeze=False,
                                 figsize=(max(4.0, 0.5 * len(kernels)) * len(noises),
                                          2.4 * len(scales)))
        pos = np.arange(len(kernels))
        for i, s in enumerate(scales):
            for j, sigma in enumerate(noises):
                ax = axes[i, j]
                for m, method in enumerate(methods):
                    vals = [lookup.get((method, s, sigma, k), np.nan) for k in kernels]
                    vals = [np.nan if np.isinf(v) else v for v in vals]
                    ax.bar(pos + (m - (len(methods) - 1) / 2) * width, vals, width, label=method)
                ax.set_title(f"x{s}, noise {sigma:g}")
                ax.set_xticks(pos)
                ax.set_xticklabels(kernels, rotation=60, ha="right")
                ax.set_ylabel("PSNR (dB)")
                finite = [v for v in lookup.values() if np.isfinite(v)]
                if finite:
                    ax.set_ylim(min(finite) - 1.0, max(finite) + 1.0)
        axes[0, 0].legend(loc="lower left")
        fig.tight_layout()
        return _save(fig, path)


def plot_schedule(schedules, path) -> Path:
    """Alpha and beta against the iteration index, one line per label.

    ``schedules`` maps a legend label to a :class:`~unfoldsr.schedule.HyperSchedule`.
    """
    with plt.rc_context(RC):
        fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(6.4, 2.6))
        for label, sch in schedules.items():
            k = np.arange(1, sch.K + 1)
            ax_a.semilogy(k, sch.alphas, marker="o", ms=3, label=label)
            ax_b.plot(k, np.asarray(sch.betas) * 255.0, marker="o", ms=3, label=label)
        ax_a.set_xlabel("iteration")
        ax_a.set_ylabel("alpha")
        ax_b.set_xlabel("iteration")
        ax_b.set_ylabel("beta (0-255 units)")
        ax_b.legend()
        fig.tight_layout()
        return _save(fig, path)


def plot_kernel(kernel, path, title: str | None = None) -> Path:
    k = np.asarray(kernel)
    lim = float(np.max(np.abs(k)))
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(2.6, 2.6))
        im = ax.imshow(k, cmap="RdBu_r", vmin=-lim, vmax=lim, interpolation="nearest")
        fig.colorbar(im, ax=ax, fraction=0.046)
        ax.set_xticks([])
        ax.set_yticks([])
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_trace(trace, path, max_columns: int = 6) -> Path:
    """Montage of ``x_0`` and the (z_k, x_k) estimates of one solver run."""
    panels = [("x0", trace.x0)] + [(f"{kind}{k}", img) for kind, k, img in trace.steps()]
    if len(panels) > max_columns:
        keep = [0, 1, 2, 3] + list(range(len(panels) - max_columns + 4, len(panels)))
        panels = [panels[i] for i in sorted(set(keep))]
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(panels), figsize=(1.8 * len(panels), 2.0), squeeze=False)
        for ax, (label, img) in zip(axes[0], panels):
            img = np.clip(img, 0.0, 1.0)
            ax.imshow(img, cmap=None if img.ndim == 3 else "gray",
                      vmin=0, vmax=1, interpolation="nearest")
            ax.set_title(label)
            ax.axis("off")
        fig.tight_layout()
        return _save(fig, path)

"""Per-iteration data weights (alpha) and denoiser levels (beta).

With penalty ``mu_k`` and trade-off ``lambda``, the unfolded iteration uses
``alpha_k = mu_k * sigma^2`` in the data step and ``beta_k = sqrt(lambda / mu_k)``
as the prior's noise level, so ``alpha_k * beta_k^2 = lambda * sigma^2`` for
every ``k``. The analytic schedule increases ``mu_k`` geometrically.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

FLOOR = 1e-6
SIGMA_FLOOR = 1e-4
DEFAULT_ITERS = 8
DEFAULT_BETA_START255 = 49.0
DEFAULT_LAMBDA = 1.0 / 3.0
MLP_HIDDEN = 64


@dataclass(frozen=True)
class HyperSchedule:
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    lambda_: float | None
    sigma: float

    def __post_init__(self):
        if len(self.alphas) != len(self.betas) or not self.alphas:
            raise ValueError("alphas and betas must be non-empty and of equal length")
        if min(self.alphas) < FLOOR or min(self.betas) < FLOOR:
            raise ValueError("schedule values must be >= 1e-6")

    @property
    def K(self) -> int:
        return len(self.alphas)

    def __iter__(self):
        return iter(zip(self.alphas, self.betas))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "alpha", "beta"])
        for k, (a, b) in enumerate(self, start=1):
            writer.writerow([k, repr(a), repr(b)])
        return buf.getvalue()


def analytic_schedule(sigma255: float, s: int = 2, K: int = DEFAULT_ITERS,
                      beta_start255: float = DEFAULT_BETA_START255,
                      lambda_: float = DEFAULT_LAMBDA) -> HyperSchedule:
    """Log-spaced decreasing ``beta`` from ``beta_start255`` to the noise level.

    ``beta`` ends at ``max(sigma255, 0.255) / 255``; noise-free inputs use
    ``sigma = 1e-4`` inside ``alpha``. The scale factor does not enter the
    analytic rule and is accepted for interface parity with the learned one.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if sigma255 < 0:
        raise ValueError("noise level must be non-negative")
    if lambda_ <= 0:
        raise ValueError("lambda must be positive")
    beta_end255 = max(sigma255, 0.255)
    if beta_start255 <= beta_end255:
        raise ValueError(f"beta start {beta_start255} must exceed beta end {beta_end255}")
    if K == 1:
        betas = np.array([beta_end255 / 255.0])
    else:
        betas = np.geomspace(beta_start255 / 255.0, beta_end255 / 255.0, K)
    sigma = sigma255 / 255.0
    mu = lambda_ / betas ** 2
    alphas = mu * max(sigma, SIGMA_FLOOR) ** 2
    return HyperSchedule(
        alphas=tuple(float(a) for a in np.maximum(alphas, FLOOR)),
        betas=tuple(float(b) for b in np.maximum(betas, FLOOR)),
        lambda_=lambda_,
        sigma=sigma,
    )


def hyper_manifest(K: int = DEFAULT_ITERS, hidden: int = MLP_HIDDEN) -> dict[str, tuple]:
    return {
        "hyper.fc1.weight": (hidden, 2), "hyper.fc1.bias": (hidden,),
        "hyper.fc2.weight": (hidden, hidden), "hyper.fc2.bias": (hidden,),
        "hyper.fc3.weight": (2 * K, hidden), "hyper.fc3.bias": (2 * K,),
    }


def softplus(x):
    return np.logaddexp(0.0, x)


def mlp_schedule(sigma255: float, s: int, weights) -> HyperSchedule:
    """Learned schedule: FC-ReLU-FC-ReLU-FC-Softplus on ``(sigma, s)``, plus 1e-6.

    ``sigma`` enters in unit range. The first ``K`` outputs are alphas,
    the rest betas.
    """
    out_rows = weights["hyper.fc3.weight"].shape[0]
    if out_rows % 2:
        raise ValueError("output layer must have 2K rows")
    K = out_rows // 2
    manifest = hyper_manifest(K, weights["hyper.fc1.weight"].shape[0])
    for name, shape in manifest.items():
        if name not in weights or tuple(weights[name].shape) != shape:
            from .priors.weights import WeightFormatError

            raise WeightFormatError(f"tensor {name!r} missing or not of shape {shape}")
    w = {n: np.asarray(weights[n], dtype=np.float64) for n in manifest}
    sigma = sigma255 / 255.0
    h = np.array([sigma, float(s)])
    h = np.maximum(w["hyper.fc1.weight"] @ h + w["hyper.fc1.bias"], 0.0)
    h = np.maximum(w["hyper.fc2.weight"] @ h + w["hyper.fc2.bias"], 0.0)
    out = softplus(w["hyper.fc3.weight"] @ h + w["hyper.fc3.bias"]) + FLOOR
    alphas, betas = out[:K], out[K:]
    if K > 1 and np.any(np.diff(betas) >= 0):
        log.warning("learned beta schedule is not strictly decreasing")
    return HyperSchedule(tuple(map(float, alphas)), tuple(map(float, betas)), None, sigma)

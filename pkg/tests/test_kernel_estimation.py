import warnings

import numpy as np
import pytest

from conftest import natural_images
from unfoldsr.degradation import DegradationSpec, blur_downsample, degrade, gaussian_kernel
from unfoldsr.imaging import make_rng, psnr, standard_downsample
from unfoldsr.kernel_estimation import (RankDeficiencyWarning, bicubic_downsample,
                                        bicubic_upsample, estimate_equivalent_kernel, cubic_weight,
                                        reapply_kernel)


def dense_bicubic_matrix(n, s):
    """Loop-built (n/s) x n weight matrix; symmetric half-sample boundary."""
    def cubic(t):
        t = abs(t)
        if t <= 1:
            return 1.5 * t ** 3 - 2.5 * t ** 2 + 1
        if t < 2:
            return -0.5 * t ** 3 + 2.5 * t ** 2 - 4 * t + 2
        return 0.0

    mat = np.zeros((n // s, n))
    for i in range(n // s):
        center = s * i + (s - 1) / 2
        for t in range(int(np.floor(center)) - 2 * s, int(np.floor(center)) + 2 * s + 1):
            weight = cubic((t - center) / s) / s
            src = t
            while src < 0 or src >= n:
                src = -src - 1 if src < 0 else 2 * n - 1 - src
            mat[i, src] += weight
    return mat


def test_cubic_weight_values():
    np.testing.assert_allclose(cubic_weight([0, 1, 2, 3]), [1, 0, 0, 0], atol=1e-15)
    assert cubic_weight(0.5) == pytest.approx(0.5625)
    assert cubic_weight(1.5) == pytest.approx(-0.0625)


def test_bicubic_constant_and_ramp():
    assert np.allclose(bicubic_downsample(np.full((12, 12, 3), 0.4), 2), 0.4, atol=1e-14)
    ramp = np.add.outer(np.arange(24.0), 2 * np.arange(24.0)) / 100
    for s in (2, 3, 4):
        out = bicubic_downsample(ramp, s)
        i = np.arange(24 // s)
        expected = np.add.outer(s * i + (s - 1) / 2, 2 * (s * i + (s - 1) / 2)) / 100
        m = 3
        np.testing.assert_allclose(out[m:-m, m:-m], expected[m:-m, m:-m], atol=1e-10)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_bicubic_matches_dense_weights(rng, s):
    n = 12 * s if s != 2 else 16
    x = rng.random((n, n))
    mat = dense_bicubic_matrix(n, s)
    np.testing.assert_allclose(bicubic_downsample(x, s), mat @ x @ mat.T, atol=1e-12)


def test_bicubic_rejects_bad_input():
    with pytest.raises(ValueError):
        bicubic_downsample(np.zeros((8, 8)), 5)
    with pytest.raises(ValueError, match="divisible"):
        bicubic_downsample(np.zeros((9, 9)), 2)


def test_bicubic_upsample_interpolates_lr_samples(rng):
    y = rng.random((7, 9, 3))
    for s in (1, 2, 3):
        up = bicubic_upsample(y, s)
        assert up.shape == (7 * s, 9 * s, 3)
        np.testing.assert_allclose(up[::s, ::s], y, atol=1e-14)


@pytest.mark.parametrize("s", [2, 3])
def test_recovers_known_gaussian(rng, s):
    k0 = gaussian_kernel(7, 1.1, 0.8, 0.4)
    images = [rng.random((48, 48)) for _ in range(3)]
    pairs = [(x, degrade(x, DegradationSpec(s, k0, 0.0), make_rng(0))) for x in images]
    est = estimate_equivalent_kernel(pairs, s, ksize=7, margin="full")
    assert np.sqrt(np.mean((est.kernel - k0) ** 2)) < 1e-6
    assert est.rmse < 1e-6


def test_residual_decreases_with_kernel_size():
    pairs = []
    for _, x in natural_images(96, ("astronaut", "coffee")):
        pairs.append((x, bicubic_downsample(x, 3)))
    rmses = [estimate_equivalent_kernel(pairs, 3, ksize=k).rmse for k in (3, 5, 7, 9)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(rmses, rmses[1:]))
    assert rmses[-1] < rmses[0]


def test_flat_images_warn():
    pairs = [(np.full((40, 40), 0.5), np.full((20, 20), 0.5))]
    with pytest.warns(RankDeficiencyWarning):
        estimate_equivalent_kernel(pairs, 2, ksize=5)


def test_bicubic_kernel_shift_and_negative_taps():
    train = natural_images(144, ("astronaut", "coffee", "chelsea"))
    pairs = [(x, bicubic_downsample(x, 2)) for _, x in train]
    with warnings.catch_warnings():
        warnings.simplefilter("error", RankDeficiencyWarning)
        est = estimate_equivalent_kernel(pairs, 2, ksize=25)
    assert est.center_of_mass == pytest.approx((11.5, 11.5), abs=0.1)
    assert est.kernel.min() < 0
    assert est.kernel.sum() == pytest.approx(1.0, abs=1e-3)
    _, held = natural_images(144, ("rocket",))[0]
    rec = blur_downsample(held, est.kernel / est.kernel.sum(), 2)
    assert psnr(rec, bicubic_downsample(held, 2)) >= 45.0


def test_shape_mismatch_rejected(rng):
    with pytest.raises(ValueError):
        estimate_equivalent_kernel([(rng.random((20, 20)), rng.random((9, 9)))], 2, ksize=5)


def test_reapply_kernel_boundary(rng):
    x = rng.random((24, 24, 3))
    np.testing.assert_array_equal(reapply_kernel(x, np.ones((1, 1)), 2), standard_downsample(x, 2))
    k = gaussian_kernel(7, 1.0)
    inner, wrapped = reapply_kernel(x, k, 2), blur_downsample(x, k, 2)
    np.testing.assert_allclose(inner[2:-2, 2:-2], wrapped[2:-2, 2:-2], atol=1e-12)
    assert not np.allclose(inner[0], wrapped[0])

import numpy as np
import pytest

from conftest import random_kernel
from unfoldsr.data_step import (DataStep, data_objective, data_step, data_step_oracle,
                                degradation_matrix, wiener_deblur)
from unfoldsr.degradation import blur_downsample, delta_kernel


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_delta_scale_one_is_blend(rng):
    x, y = rng.random((2, 10, 10, 3))
    for alpha in (1e-3, 0.5, 20.0):
        z = data_step(x, y, delta_kernel(1), 1, alpha)
        np.testing.assert_allclose(z, (y + alpha * x) / (1 + alpha), atol=1e-12)
        o = data_step_oracle(x, y, delta_kernel(1), 1, alpha)
        np.testing.assert_allclose(o, (y + alpha * x) / (1 + alpha), atol=1e-12)


def test_large_alpha_anchors_to_previous(rng):
    x = rng.random((12, 12))
    y = rng.random((6, 6))
    k = random_kernel(rng, 5)
    z = data_step(x, y, k, 2, 1e6)
    assert rel(z, x) <= 1e-4
    assert rel(data_step_oracle(x, y, k, 2, 1e6), x) <= 1e-4


@pytest.mark.parametrize("s", [1, 2, 3])
@pytest.mark.parametrize("alpha", [1e-3, 0.1, 10.0])
def test_matches_dense_oracle(rng, s, alpha):
    x = rng.random((12, 12))
    y = rng.random((12 // s, 12 // s))
    k = random_kernel(rng, 5)
    assert rel(data_step(x, y, k, s, alpha), data_step_oracle(x, y, k, s, alpha)) <= 1e-6


def test_color_channels_independent(rng):
    x = rng.random((12, 12, 3))
    y = rng.random((4, 4, 3))
    k = random_kernel(rng, 3)
    z = data_step(x, y, k, 3, 0.05)
    for c in range(3):
        np.testing.assert_allclose(z[..., c], data_step(x[..., c], y[..., c], k, 3, 0.05), atol=1e-13)


def test_wiener_equals_scale_one_step(rng):
    for _ in range(5):
        y, x = rng.random((2, 9, 11))
        k = random_kernel(rng, 3)
        alpha = 10 ** rng.uniform(-3, 1)
        np.testing.assert_allclose(wiener_deblur(y, k, alpha, x), data_step(x, y, k, 1, alpha),
                                   atol=1e-10)


def test_wiener_trivial_cases(rng):
    y, x = rng.random((2, 8, 8))
    np.testing.assert_allclose(wiener_deblur(y, delta_kernel(3), 0.3, x), (y + 0.3 * x) / 1.3,
                               atol=1e-12)
    np.testing.assert_allclose(wiener_deblur(y, delta_kernel(1), 1.0, y), y, atol=1e-12)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_energy_optimality(rng, s):
    x = rng.random((12, 12))
    y = rng.random((12 // s, 12 // s))
    k = random_kernel(rng, 5)
    alpha = 0.05
    z = data_step(x, y, k, s, alpha)
    best = data_objective(z, x, y, k, s, alpha)
    for _ in range(50):
        eps = 1e-3 * rng.normal(size=z.shape)
        assert data_objective(z + eps, x, y, k, s, alpha) >= best


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_exact_data_is_fixed_point(rng, s):
    x_true = rng.random((24, 24, 3))
    k = random_kernel(rng, 7)
    y = blur_downsample(x_true, k, s)
    step = DataStep(y, k, s)
    for alpha in (1e-6, 1e-3, 1.0, 100.0):
        np.testing.assert_allclose(step(x_true, alpha), x_true, atol=1e-8)


def test_deterministic(rng):
    x = rng.random((12, 12))
    y = rng.random((6, 6))
    k = random_kernel(rng, 5)
    assert np.array_equal(data_step(x, y, k, 2, 0.1), data_step(x, y, k, 2, 0.1))


def test_alpha_guard(rng):
    x = rng.random((8, 8))
    y = rng.random((4, 4))
    with pytest.raises(ValueError):
        data_step(x, y, delta_kernel(), 2, 1e-13)
    with pytest.raises(ValueError):
        data_step(x, y, delta_kernel(), 2, float("nan"))
    # values between the guard and the floor are clamped up to 1e-6
    np.testing.assert_allclose(data_step(x, y, delta_kernel(), 2, 1e-9),
                               data_step(x, y, delta_kernel(), 2, 1e-6), atol=1e-12)


def test_shape_checks(rng):
    with pytest.raises(ValueError):
        data_step(rng.random((8, 8)), rng.random((3, 3)), delta_kernel(), 2, 0.1)
    with pytest.raises(ValueError, match="capped"):
        data_step_oracle(rng.random((34, 34)), rng.random((17, 17)), delta_kernel(), 2, 0.1)


def test_degradation_matrix_shape():
    a = degradation_matrix(np.ones((3, 3)) / 9, (6, 6), 2)
    assert a.shape == (9, 36)
    np.testing.assert_allclose(a.sum(axis=1), 1.0)

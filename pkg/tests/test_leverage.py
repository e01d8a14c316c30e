import numpy as np
import pytest

from smmport import (
    DomainError,
    LeverageSample,
    ShapeMismatch,
    kernel_regress,
    leverage_curve,
    silverman_bandwidth,
)


def synthetic_sample(seed=19, a=0.1, sigma=1.0, t_count=20000):
    """y | x ~ N(a x, sigma^2) with x uniform; optimal leverage is
    a x / (sigma^2 + a^2 x^2), essentially linear when the noise dominates."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.5, 2.5, t_count)
    y = a * x + sigma * rng.standard_normal(t_count)
    return LeverageSample.from_observations(x, y * x), a, sigma


def test_constant_response_reproduced():
    rng = np.random.default_rng(40)
    xs = rng.uniform(0.0, 1.0, 200)
    ys = np.full(200, 5.0)
    grid = np.linspace(0.1, 0.9, 9)
    est = kernel_regress(xs, ys, grid, bandwidth=0.2)
    np.testing.assert_allclose(est, 5.0, rtol=1e-12)


def test_interpolation_with_tiny_bandwidth():
    # samples several bandwidths apart: the estimate interpolates ys
    xs = np.linspace(0.0, 10.0, 100)
    h = (xs.max() - xs.min()) / 1000.0
    est = kernel_regress(xs, xs, xs, bandwidth=h)
    np.testing.assert_allclose(est, xs, atol=1e-6)


def test_far_grid_point_missing():
    xs = np.array([1.0, 1.1, 0.9, 1.05])
    ys = np.array([2.0, 2.1, 1.9, 2.05])
    est = kernel_regress(xs, ys, np.array([1.0, 500.0]), bandwidth=0.1)
    assert est[0] == pytest.approx(2.0, abs=0.1)
    assert np.isnan(est[1])


def test_estimates_are_convex_combinations():
    rng = np.random.default_rng(42)
    xs = rng.uniform(-1.0, 1.0, 500)
    ys = rng.standard_normal(500)
    grid = np.linspace(-1.0, 1.0, 21)
    est = kernel_regress(xs, ys, grid, bandwidth=0.3)
    assert np.all(est >= ys.min() - 1e-12)
    assert np.all(est <= ys.max() + 1e-12)


def test_kernel_regress_validation():
    with pytest.raises(DomainError):
        kernel_regress([1.0, 2.0], [1.0, 2.0], [1.5], bandwidth=0.0)
    with pytest.raises(ShapeMismatch):
        kernel_regress([1.0, 2.0], [1.0], [1.5], bandwidth=0.1)
    with pytest.raises(DomainError):
        kernel_regress([1.0], [1.0], [1.0], bandwidth=0.1)


def test_sample_validation():
    with pytest.raises(DomainError):
        LeverageSample.from_observations([1.0], [0.1])
    with pytest.raises(DomainError):
        LeverageSample.from_observations([1.0, -0.5], [0.1, 0.1])
    with pytest.raises(DomainError):
        LeverageSample.from_observations([1.0, np.inf], [0.1, 0.1])
    with pytest.raises(ShapeMismatch):
        LeverageSample.from_observations([1.0, 2.0], [0.1])
    sample = LeverageSample.from_observations([2.0, 4.0], [0.5, 2.0])
    np.testing.assert_allclose(sample.y, [0.25, 0.5])


def test_curve_zero_returns():
    x = np.linspace(1.0, 2.0, 100)
    sample = LeverageSample.from_observations(x, np.zeros(100))
    curve = leverage_curve(sample)
    assert np.all(curve.s_hat > 0.0)
    np.testing.assert_array_equal(curve.lever_hat, 0.0)


def test_curve_floor_binding():
    x = np.linspace(1.0, 2.0, 100)
    sample = LeverageSample.from_observations(x, np.zeros(100))
    curve = leverage_curve(sample, floor=1e-4)
    np.testing.assert_array_equal(curve.s_hat, 1e-4)
    np.testing.assert_array_equal(curve.lever_hat, 0.0)


def test_curve_defaults_and_grid():
    sample, _, _ = synthetic_sample(t_count=2000)
    curve = leverage_curve(sample)
    assert curve.n_points == 101
    assert curve.grid[0] == pytest.approx(sample.x.min())
    assert curve.grid[-1] == pytest.approx(sample.x.max())
    assert np.all(np.diff(curve.grid) > 0.0)
    with pytest.raises(DomainError):
        leverage_curve(sample, grid=[2.0, 1.0])
    with pytest.raises(DomainError):
        leverage_curve(sample, bandwidth=-0.1)
    with pytest.raises(DomainError):
        leverage_curve(sample, floor=0.0)


def test_constant_leverage_needs_explicit_bandwidth():
    sample = LeverageSample.from_observations([1.5] * 50, [0.1] * 50)
    with pytest.raises(DomainError):
        leverage_curve(sample)
    curve = leverage_curve(sample, grid=[1.5], bandwidth=0.5)
    assert curve.n_points == 1


def test_scale_equivariance():
    sample, _, _ = synthetic_sample(seed=43, t_count=4000)
    doubled = LeverageSample.from_observations(sample.x, 2.0 * sample.z)
    h = silverman_bandwidth(sample.x)
    base = leverage_curve(sample, bandwidth=h, floor=1e-12)
    twice = leverage_curve(doubled, bandwidth=h, floor=1e-12)
    np.testing.assert_allclose(twice.m_hat, 2.0 * base.m_hat, rtol=1e-10)
    np.testing.assert_allclose(twice.s_hat, 4.0 * base.s_hat, rtol=1e-10)
    np.testing.assert_allclose(twice.lever_hat, 0.5 * base.lever_hat, rtol=1e-10)


def test_shuffle_invariance():
    sample, _, _ = synthetic_sample(seed=44, t_count=3000)
    rng = np.random.default_rng(0)
    perm = rng.permutation(sample.n)
    shuffled = LeverageSample.from_observations(sample.x[perm], sample.z[perm])
    h = silverman_bandwidth(sample.x)
    a = leverage_curve(sample, bandwidth=h)
    b = leverage_curve(shuffled, bandwidth=h)
    np.testing.assert_allclose(a.lever_hat, b.lever_hat, rtol=1e-9)


def test_synthetic_linear_recovery():
    sample, a, sigma = synthetic_sample(seed=19, t_count=20000)
    curve = leverage_curve(sample)
    lo = curve.n_points // 10
    hi = curve.n_points - lo
    g = curve.grid[lo:hi]
    lever = curve.lever_hat[lo:hi]
    slope = float(g @ lever) / float(g @ g)
    assert slope == pytest.approx(a / sigma**2, rel=0.10)

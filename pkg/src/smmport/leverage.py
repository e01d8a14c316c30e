"""Leverage overlay: does a strategy size itself optimally?

From observed strategy returns z_t and leverage x_t > 0, form the
unit-levered returns y_t = z_t / x_t and estimate, nonparametrically,
how the conditional mean and conditional second moment of y vary with x.
Up to a constant, the optimal leverage at x is mean(x) / second(x); if
the strategy already levers optimally, plotting that ratio against x
gives a straight line through the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, ShapeMismatch

# Grid points whose total kernel mass falls below this are emitted as
# missing (NaN) rather than dividing by ~0.
MIN_KERNEL_MASS = 1e-300

DEFAULT_GRID_SIZE = 101


def silverman_bandwidth(xs: np.ndarray) -> float:
    """Rule-of-thumb bandwidth 1.06 * std(x) * T**(-1/5)."""
    xs = np.asarray(xs, dtype=np.float64)
    return 1.06 * float(np.std(xs, ddof=1)) * xs.size ** (-0.2)


def kernel_regress(xs, ys, grid, bandwidth: float) -> np.ndarray:
    """Nadaraya-Watson estimate of E[y | x] at each grid point.

    Gaussian kernel. Points with vanishing kernel mass come back NaN.
    Where defined, the estimate is a convex combination of the ys.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    if xs.ndim != 1 or ys.shape != xs.shape:
        raise ShapeMismatch("xs and ys must be 1-d arrays of equal length")
    if xs.size < 2:
        raise DomainError("need at least two samples")
    if not float(bandwidth) > 0.0:
        raise DomainError("bandwidth must be positive")
    den, num = kernels.nw_sums(xs, ys, grid, bandwidth)
    out = np.full(grid.size, np.nan)
    mask = den >= MIN_KERNEL_MASS
    out[mask] = num[0, mask] / den[mask]
    return out


@dataclass(frozen=True)
class LeverageSample:
    """Observed leverage and strategy returns; y = z / x derived."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray

    @classmethod
    def from_observations(cls, leverage, strategy_returns) -> "LeverageSample":
        x = np.ascontiguousarray(leverage, dtype=np.float64)
        z = np.ascontiguousarray(strategy_returns, dtype=np.float64)
        if x.ndim != 1 or z.shape != x.shape:
            raise ShapeMismatch("leverage and returns must be 1-d, equal length")
        if x.size < 2:
            raise DomainError("need at least two observations")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(z)):
            raise DomainError("observations must be finite")
        if not np.all(x > 0.0):
            raise DomainError("leverage must be strictly positive")
        y = z / x
        for arr in (x, z, y):
            arr.flags.writeable = False
        return cls(x=x, z=z, y=y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class LeverageCurve:
    """Estimated mean, second moment, and implied leverage on a grid.

    Only grid points with enough kernel mass are kept; ``lever_hat`` is
    defined up to a positive constant.
    """

    grid: np.ndarray
    m_hat: np.ndarray
    s_hat: np.ndarray
    lever_hat: np.ndarray

    @property
    def n_points(self) -> int:
        return self.grid.size


def leverage_curve(
    sample: LeverageSample,
    grid=None,
    bandwidth: float | None = None,
    floor: float | None = None,
) -> LeverageCurve:
    """Estimate the implied optimal-leverage curve of a strategy.

    Parameters
    ----------
    sample : LeverageSample
    grid : array, optional
        Strictly increasing evaluation points; defaults to 101 equally
        spaced points spanning the observed leverage range.
    bandwidth : float, optional
        Gaussian kernel bandwidth; defaults to Silverman's rule.
    floor : float, optional
        Lower bound applied to the second-moment estimate before
        dividing. Defaults to 1e-8 times its largest estimate (with a
        tiny positive fallback when all estimates vanish).
    """
    if grid is None:
        grid = np.linspace(float(sample.x.min()), float(sample.x.max()),
                           DEFAULT_GRID_SIZE)
    else:
        grid = np.ascontiguousarray(grid, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0:
            raise DomainError("grid must be a nonempty 1-d array")
        if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
            raise DomainError("grid must be strictly increasing")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(sample.x)
    if not float(bandwidth) > 0.0:
        raise DomainError(
            "bandwidth must be positive (constant leverage sample needs an "
            "explicit bandwidth)"
        )

    den, num = kernels.nw_sums(
        sample.x, np.vstack([sample.y, sample.y * sample.y]), grid, bandwidth
    )
    mask = den >= MIN_KERNEL_MASS
    m_hat = num[0, mask] / den[mask]
    s_raw = num[1, mask] / den[mask]

    if floor is None:
        top = float(s_raw.max()) if s_raw.size else 0.0
        floor = 1e-8 * top if top > 0.0 else np.finfo(np.float64).tiny
    if not float(floor) > 0.0:
        raise DomainError("floor must be positive")
    s_hat = np.maximum(s_raw, floor)

    curve = LeverageCurve(
        grid=grid[mask], m_hat=m_hat, s_hat=s_hat, lever_hat=m_hat / s_hat
    )
    for arr in (curve.grid, curve.m_hat, curve.s_hat, curve.lever_hat):
        arr.flags.writeable = False
    return curve

"""Univariate building blocks: grid-backed Brownian densities and the linear density."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import box_muller, make_rng

__all__ = ["GridDensity1D", "LinearDensity1D", "make_expbm_density", "make_linear_hj", "rho"]


def rho(x):
    """``max(0, (4x/3)(1 - 4x/3))``; vanishes at 0 and beyond 3/4."""
    y = 4.0 * np.asarray(x, dtype=float) / 3.0
    return np.maximum(0.0, y * (1.0 - y))


@dataclass(frozen=True)
class GridDensity1D:
    """Piecewise-linear density through ``values`` on a uniform grid of ``[0, support_hi]``.

    ``cdf`` holds the trapezoid cumulative at the knots and ends at exactly 1.
    """

    support_hi: float
    values: np.ndarray
    cdf: np.ndarray

    @classmethod
    def from_values(cls, support_hi: float, values) -> "GridDensity1D":
        v = np.asarray(values, dtype=float).copy()
        if v.ndim != 1 or v.size < 2:
            raise ValueError("need at least two knots")
        if not np.all(np.isfinite(v)) or v.min() < 0:
            raise ValueError("density values must be finite and non-negative")
        dx = support_hi / (v.size - 1)
        cells = 0.5 * dx * (v[1:] + v[:-1])
        total = cells.sum()
        if not total > 0:
            raise ValueError("density has zero mass")
        v /= total
        cdf = np.concatenate([[0.0], np.cumsum(cells / total)])
        cdf[-1] = 1.0
        v.setflags(write=False)
        cdf.setflags(write=False)
        return cls(float(support_hi), v, cdf)

    @property
    def resolution(self) -> int:
        return self.values.size - 1

    @property
    def step(self) -> float:
        return self.support_hi / self.resolution

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(0.0, self.support_hi, self.values.size)

    def integral(self) -> float:
        return float(0.5 * self.step * np.sum(self.values[1:] + self.values[:-1]))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= self.support_hi)
        return np.where(inside, np.interp(x, self.knots, self.values), 0.0)

    def cdf_at(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.support_hi)
        i = np.minimum((x / self.step).astype(int), self.resolution - 1)
        t = x / self.step - i
        a, b = self.values[i], self.values[i + 1]
        return self.cdf[i] + self.step * (a * t + 0.5 * (b - a) * t * t)

    def ppf(self, u):
        """Exact inverse of the piecewise-quadratic cdf."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        i = np.clip(np.searchsorted(self.cdf, u, side="right") - 1, 0, self.resolution - 1)
        a, b = self.values[i], self.values[i + 1]
        r = np.maximum(u - self.cdf[i], 0.0) / self.step
        disc = np.sqrt(np.maximum(a * a + 2.0 * (b - a) * r, 0.0))
        denom = a + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom > 0, 2.0 * r / denom, 0.0)
        return (i + np.clip(t, 0.0, 1.0)) * self.step

    def sample(self, n: int, rng) -> np.ndarray:
        return self.ppf(make_rng(rng).random(n))

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.knots, self.values]), delimiter=",",
                   header="x,value", comments="", fmt="%.17g")


@dataclass(frozen=True)
class LinearDensity1D:
    """``h(x) = 1 - (2x - 1)/d`` on [0, 1], between ``1 - 1/d`` and ``1 + 1/d``."""

    d: int
    support_hi: float = 1.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        return np.where(inside, 1.0 - (2.0 * x - 1.0) / self.d, 0.0)

    def cdf_at(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return x + x * (1.0 - x) / self.d

    def ppf(self, u):
        # root in [0, 1] of x^2 - (d + 1) x + d u = 0, written without cancellation
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        b = self.d + 1.0
        return 2.0 * self.d * u / (b + np.sqrt(b * b - 4.0 * self.d * u))

    def sample(self, n: int, rng) -> np.ndarray:
        return self.ppf(make_rng(rng).random(n))


def make_expbm_density(seed: int, resolution: int = 4096, with_rho: bool = False) -> GridDensity1D:
    """Normalized ``exp(W)`` for a standard Brownian path ``W`` with ``W(0) = 0``.

    With ``with_rho`` the path is multiplied by :func:`rho` and lives on
    ``[0, 3/4]``, so the value at 0 is exactly 0.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    hi = 0.75 if with_rho else 1.0
    dx = hi / resolution
    incr = box_muller(make_rng(seed), resolution) * np.sqrt(dx)
    path = np.concatenate([[0.0], np.cumsum(incr)])
    vals = np.exp(path)
    if with_rho:
        vals = vals * rho(np.linspace(0.0, hi, resolution + 1))
        vals[0] = 0.0
        vals[-1] = 0.0
    return GridDensity1D.from_values(hi, vals)


def make_linear_hj(d: int) -> LinearDensity1D:
    if d < 1:
        raise ValueError("d must be positive")
    return LinearDensity1D(int(d))

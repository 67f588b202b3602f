"""D-vine with Farlie-Gumbel-Morgenstern pair copulas and square-root marginals.

Only the first tree carries dependence, so in uniform margins the model is a
Markov chain ``u_1 -> u_2 -> ... -> u_d``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import make_rng
from ..kde import Dataset

__all__ = [
    "fgm_pair_density",
    "fgm_h",
    "fgm_h_inverse",
    "theta_for_edge",
    "marginal_fk",
    "cdf_fk",
    "inv_cdf_fk",
    "VineCopulaDensity",
]


def fgm_pair_density(u, v, theta: float):
    if abs(theta) > 1:
        raise ValueError(f"FGM parameter must satisfy |theta| <= 1, got {theta}")
    return 1.0 + theta * (1.0 - 2.0 * np.asarray(u, dtype=float)) * (1.0 - 2.0 * np.asarray(v, dtype=float))


def fgm_h(v, u, theta: float):
    """Conditional cdf ``P(V <= v | U = u) = v + a v (1 - v)`` with ``a = theta (1 - 2u)``."""
    a = theta * (1.0 - 2.0 * np.asarray(u, dtype=float))
    v = np.asarray(v, dtype=float)
    return v + a * v * (1.0 - v)


def fgm_h_inverse(w, u, theta: float):
    """Solve ``a v^2 - (1 + a) v + w = 0`` for the root in [0, 1]."""
    a = theta * (1.0 - 2.0 * np.asarray(u, dtype=float))
    w = np.asarray(w, dtype=float)
    b = 1.0 + a
    # 2w / (b + sqrt(b^2 - 4aw)) is the small root with no cancellation; it equals w at a = 0
    v = 2.0 * w / (b + np.sqrt(np.maximum(b * b - 4.0 * a * w, 0.0)))
    return np.where(np.abs(a) < 1e-12, w, np.clip(v, 0.0, 1.0))


def theta_for_edge(i: int, d: int) -> float:
    """Parameter of the FGM copula on edge ``(i, i+1)``, ``i = 1..d-1``."""
    if d < 3:
        raise ValueError("the vine schedule needs d >= 3")
    if not 1 <= i <= d - 1:
        raise ValueError(f"edge index {i} outside 1..{d - 1}")
    # compare (i-1)/(d-2) == 1/2 in integers
    if 2 * (i - 1) == d - 2:
        return 0.01
    return -1.0 + 2.0 * (i - 1) / (d - 2)


def _check_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("argument outside [0, 1]")
    return x


def marginal_fk(x, d: int):
    x = _check_unit(x)
    a, b, s = 1.0 + 0.5 / d, 1.0 - 0.5 / d, 1.0 / d
    return np.select(
        [x < 0.25, x < 0.5, x < 0.75],
        [
            a - s * np.sqrt(np.abs(0.25 - x)),
            a - s * np.sqrt(np.abs(x - 0.25)),
            b + s * np.sqrt(np.abs(0.75 - x)),
        ],
        b + s * np.sqrt(np.abs(x - 0.75)),
    )


def cdf_fk(x, d: int):
    x = _check_unit(x)
    a, b, c = 1.0 + 0.5 / d, 1.0 - 0.5 / d, 2.0 / (3.0 * d)
    F14 = a / 4.0 - 1.0 / (12.0 * d)
    F12 = a / 2.0 - 1.0 / (6.0 * d)
    F34 = F12 + b / 4.0 + 1.0 / (12.0 * d)
    p1 = a * x - c * (0.125 - np.abs(0.25 - x) ** 1.5)
    p2 = F14 + a * (x - 0.25) - c * np.abs(x - 0.25) ** 1.5
    p3 = F12 + b * (x - 0.5) + c * (0.125 - np.abs(0.75 - x) ** 1.5)
    p4 = F34 + b * (x - 0.75) + c * np.abs(x - 0.75) ** 1.5
    return np.select([x < 0.25, x < 0.5, x < 0.75], [p1, p2, p3], p4)


def inv_cdf_fk(u, d: int, tol: float = 1e-12):
    """Bisection to ``tol`` then two Newton steps; the cdf is strictly increasing."""
    u = _check_unit(u)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        below = cdf_fk(mid, d) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(2):
        x = np.clip(x - (cdf_fk(x, d) - u) / marginal_fk(x, d), 0.0, 1.0)
    return x


@dataclass(frozen=True)
class VineCopulaDensity:
    dim: int
    thetas: tuple
    tag: str = "C"

    def __post_init__(self):
        if self.dim < 3:
            raise ValueError("vine model needs d >= 3")
        th = tuple(float(t) for t in self.thetas)
        if len(th) != self.dim - 1 or any(abs(t) > 1 for t in th):
            raise ValueError("need d-1 FGM parameters in [-1, 1]")
        object.__setattr__(self, "thetas", th)

    @classmethod
    def default(cls, d: int) -> "VineCopulaDensity":
        return cls(d, tuple(theta_for_edge(i, d) for i in range(1, d)))

    def pdf(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {X.shape[1]}")
        U = cdf_fk(X, self.dim)
        out = np.prod(marginal_fk(X, self.dim), axis=1)
        for i, th in enumerate(self.thetas):
            out = out * fgm_pair_density(U[:, i], U[:, i + 1], th)
        return out

    def sample(self, n: int, seed) -> Dataset:
        rng = make_rng(seed)
        U = np.empty((n, self.dim))
        U[:, 0] = rng.random(n)
        for i, th in enumerate(self.thetas):
            U[:, i + 1] = fgm_h_inverse(rng.random(n), U[:, i], th)
        X = inv_cdf_fk(U, self.dim)
        return Dataset(X, seed if isinstance(seed, int) else 0, self.tag)

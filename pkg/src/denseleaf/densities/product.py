"""Independent product of the linear densities; smooth inside the cube."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import make_rng
from ..kde import Dataset
from .grid import make_linear_hj

__all__ = ["LinearProductDensity"]


@dataclass(frozen=True)
class LinearProductDensity:
    """``prod_r (1 - (2 x_r - 1)/d)`` with declared Hoelder smoothness ``beta = 1``.

    ``holder_bound`` is the sup norm plus the Lipschitz constant with respect to
    the sup-norm distance, which is the radius of the beta = 1 Hoelder ball.
    """

    dim: int
    beta: float = 1.0
    tag: str = "linprod"

    @property
    def factor(self):
        return make_linear_hj(self.dim)

    @property
    def holder_bound(self) -> float:
        top = 1.0 + 1.0 / self.dim
        return max(1.0, top**self.dim + self.dim * (2.0 / self.dim) * top ** (self.dim - 1))

    def pdf(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {X.shape[1]}")
        return np.prod(self.factor.pdf(X), axis=1)

    def sample(self, n: int, seed) -> Dataset:
        rng = make_rng(seed)
        X = self.factor.ppf(rng.random((n, self.dim)))
        return Dataset(X, seed if isinstance(seed, int) else 0, self.tag)

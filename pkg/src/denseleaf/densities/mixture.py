"""Finite mixtures ``sum_j a_j f_j`` of joint densities sharing one dimension."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import make_rng
from ..kde import Dataset

__all__ = ["MixtureDensity"]


@dataclass(frozen=True)
class MixtureDensity:
    weights: tuple
    components: tuple
    tag: str = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.components) or w.size == 0:
            raise ValueError("one weight per component is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to one")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise ValueError(f"components disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def pdf(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for a, comp in zip(self.weights, self.components):
            if a:
                out = out + a * comp.pdf(X)
        return out

    def sample(self, n: int, seed) -> Dataset:
        rng = make_rng(seed)
        labels = rng.choice(len(self.weights), size=n, p=np.asarray(self.weights))
        X = np.empty((n, self.dim))
        for j, comp in enumerate(self.components):
            idx = np.flatnonzero(labels == j)
            if idx.size:
                X[idx] = comp.sample(idx.size, rng).points
        return Dataset(X, seed if isinstance(seed, int) else 0, self.tag)

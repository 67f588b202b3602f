"""Bayesian-network joints built from mixing and shifting conditionals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .._rng import make_rng
from ..kde import Dataset

__all__ = [
    "ConditionalKind",
    "ConditionalDensity",
    "DagKind",
    "DagDensityModel",
    "eval_conditional",
    "parent_of",
]


class ConditionalKind(str, Enum):
    MIXING = "mixing"
    SHIFTING = "shifting"


class DagKind(str, Enum):
    NAIVE_BAYES = "NB"
    BINARY_TREE = "BT"


def parent_of(j: int, kind: DagKind) -> int:
    """1-based parent index of node ``j >= 2``."""
    if j < 2:
        raise ValueError("the root has no parent")
    if kind == DagKind.NAIVE_BAYES:
        return 1
    return math.ceil((j - 1) / 2)


@dataclass(frozen=True)
class ConditionalDensity:
    """``f(child | parent)`` from a base density ``h``.

    Mixing: ``p h(x) + (1 - p) h(1 - x)``.  Shifting: ``h(max(x - p/4, 0))``,
    which only integrates to one when ``h`` lives on ``[0, 3/4]`` and ``h(0) = 0``.
    """

    kind: ConditionalKind
    base: object

    def __post_init__(self):
        kind = ConditionalKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind == ConditionalKind.MIXING and self.base.support_hi != 1.0:
            raise ValueError("mixing base must be supported on [0, 1]")
        if kind == ConditionalKind.SHIFTING:
            if self.base.support_hi != 0.75:
                raise ValueError("shifting base must be supported on [0, 3/4]")
            if float(self.base.pdf(0.0)) != 0.0:
                raise ValueError("shifting base must vanish at 0")

    def pdf(self, x_child, x_parent):
        x = np.asarray(x_child, dtype=float)
        p = np.asarray(x_parent, dtype=float)
        if self.kind == ConditionalKind.MIXING:
            return p * self.base.pdf(x) + (1.0 - p) * self.base.pdf(1.0 - x)
        return self.base.pdf(np.maximum(x - p / 4.0, 0.0))

    def sample(self, x_parent, rng) -> np.ndarray:
        rng = make_rng(rng)
        p = np.asarray(x_parent, dtype=float)
        z = self.base.sample(p.size, rng)
        if self.kind == ConditionalKind.MIXING:
            keep = rng.random(p.size) < p
            return np.where(keep, z, 1.0 - z)
        return z + p / 4.0


def eval_conditional(c: ConditionalDensity, x_child: float, x_parent: float) -> float:
    for name, v in (("x_child", x_child), ("x_parent", x_parent)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    return float(c.pdf(x_child, x_parent))


@dataclass(frozen=True)
class DagDensityModel:
    """``f_1(x_1) prod_{j>=2} f_j(x_j | x_pa(j))`` on ``[0, 1]^d``."""

    dim: int
    dag_kind: DagKind
    root: object
    conditionals: tuple
    tag: str = "dag"

    def __post_init__(self):
        object.__setattr__(self, "dag_kind", DagKind(self.dag_kind))
        object.__setattr__(self, "conditionals", tuple(self.conditionals))
        if len(self.conditionals) != self.dim - 1:
            raise ValueError(f"need {self.dim - 1} conditionals, got {len(self.conditionals)}")

    def parent(self, j: int) -> int:
        return parent_of(j, self.dag_kind)

    def pdf(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {X.shape[1]}")
        out = self.root.pdf(X[:, 0])
        for j in range(2, self.dim + 1):
            out = out * self.conditionals[j - 2].pdf(X[:, j - 1], X[:, self.parent(j) - 1])
        return out

    def sample(self, n: int, seed) -> Dataset:
        """Ancestral sampling: root by inverse cdf, then each child given its parent."""
        rng = make_rng(seed)
        X = np.empty((n, self.dim))
        X[:, 0] = self.root.sample(n, rng)
        for j in range(2, self.dim + 1):
            X[:, j - 1] = self.conditionals[j - 2].sample(X[:, self.parent(j) - 1], rng)
        np.clip(X, 0.0, 1.0, out=X)
        return Dataset(X, seed if isinstance(seed, int) else 0, self.tag)

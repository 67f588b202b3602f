"""Synthetic joint densities on ``[0, 1]^d``.

Families: ``NBm``, ``NBs`` (naive Bayes), ``BTm``, ``BTs`` (binary tree),
``C`` (FGM D-vine) and ``mixture``.  Every model exposes ``dim``,
``pdf(X)`` for an ``(m, d)`` array and ``sample(n, seed) -> Dataset``.
"""
from __future__ import annotations

import json

import numpy as np

from .._rng import derive_seed
from .dag import (
    ConditionalDensity,
    ConditionalKind,
    DagDensityModel,
    DagKind,
    eval_conditional,
    parent_of,
)
from .grid import GridDensity1D, LinearDensity1D, make_expbm_density, make_linear_hj, rho
from .mixture import MixtureDensity
from .product import LinearProductDensity
from .vine import (
    VineCopulaDensity,
    cdf_fk,
    fgm_h,
    fgm_h_inverse,
    fgm_pair_density,
    inv_cdf_fk,
    marginal_fk,
    theta_for_edge,
)

__all__ = [
    "ConditionalDensity",
    "ConditionalKind",
    "DagDensityModel",
    "DagKind",
    "GridDensity1D",
    "LinearDensity1D",
    "LinearProductDensity",
    "MixtureDensity",
    "VineCopulaDensity",
    "DAG_FAMILIES",
    "FAMILIES",
    "build_dag_model",
    "cdf_fk",
    "eval_conditional",
    "eval_joint",
    "fgm_h",
    "fgm_h_inverse",
    "fgm_pair_density",
    "inv_cdf_fk",
    "make_expbm_density",
    "make_linear_hj",
    "make_model",
    "marginal_fk",
    "node_plan",
    "parent_of",
    "rho",
    "sample",
    "theta_for_edge",
]

DAG_FAMILIES = ("NBm", "NBs", "BTm", "BTs")
FAMILIES = DAG_FAMILIES + ("C", "mixture")
SHIFT_RULES = ("aligned", "literal")


def node_plan(family: str, j: int, shift_rule: str = "aligned") -> tuple:
    """``(kind, base)`` for node ``j >= 2``; base is ``"linear"``, ``"expbm"`` or ``"expbm_rho"``.

    Rough bases go to nodes with ``j - 1`` divisible by 3.  Under ``"aligned"``
    the shifting nodes of the ``*s`` families are exactly those rough nodes;
    under ``"literal"`` they are the nodes with ``j`` divisible by 3.  A shifting
    node always gets the rho-damped base, the only base with the support a
    shifting conditional needs.
    """
    if shift_rule not in SHIFT_RULES:
        raise ValueError(f"shift_rule must be one of {SHIFT_RULES}")
    rough = (j - 1) % 3 == 0
    shifting = family.endswith("s") and (rough if shift_rule == "aligned" else j % 3 == 0)
    if shifting:
        return ConditionalKind.SHIFTING, "expbm_rho"
    return ConditionalKind.MIXING, ("expbm" if rough else "linear")


def build_dag_model(family: str, d: int, seed: int, resolution: int = 4096,
                    shift_rule: str = "aligned") -> DagDensityModel:
    if family not in DAG_FAMILIES:
        raise ValueError(f"unknown DAG family {family!r}")
    if d < 1:
        raise ValueError("d must be positive")
    root = make_expbm_density(derive_seed(seed, "node", 1), resolution)
    conds = []
    for j in range(2, d + 1):
        kind, base_name = node_plan(family, j, shift_rule)
        if base_name == "linear":
            base = make_linear_hj(d)
        else:
            base = make_expbm_density(derive_seed(seed, "node", j), resolution,
                                      with_rho=base_name == "expbm_rho")
        conds.append(ConditionalDensity(kind, base))
    dag_kind = DagKind.NAIVE_BAYES if family.startswith("NB") else DagKind.BINARY_TREE
    return DagDensityModel(d, dag_kind, root, tuple(conds), tag=family)


def make_model(desc):
    """Build a model from a descriptor dict (or its JSON text).

    ``{"family": "NBm"|"NBs"|"BTm"|"BTs"|"C", "d": int, "seed": int,
    "resolution": int}``; mixtures add ``"components"`` (descriptors) and
    optional ``"weights"`` (uniform by default).
    """
    if isinstance(desc, str):
        desc = json.loads(desc)
    family = desc.get("family")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    d = int(desc["d"])
    if family in DAG_FAMILIES:
        return build_dag_model(family, d, int(desc.get("seed", 0)),
                               int(desc.get("resolution", 4096)),
                               desc.get("shift_rule", "aligned"))
    if family == "C":
        return VineCopulaDensity.default(d)
    comps = [make_model({**c, "d": c.get("d", d)}) for c in desc["components"]]
    weights = desc.get("weights") or [1.0 / len(comps)] * len(comps)
    return MixtureDensity(tuple(weights), tuple(comps))


def eval_joint(model, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.dim:
        raise ValueError(f"expected a {model.dim}-vector, got length {x.size}")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("point outside [0, 1]^d")
    return float(model.pdf(x[None, :])[0])


def sample(model, n: int, seed):
    if n < 1:
        raise ValueError("n must be positive")
    return model.sample(n, seed)

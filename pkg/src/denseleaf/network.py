"""Sparse ReLU networks written directly in numpy.

A network with depth ``L`` and widths ``p = (p_0, ..., p_{L+1})`` computes

    x -> W_L s_{v_L} W_{L-1} ... W_1 s_{v_1} W_0 x,   s_v(y) = max(y - v, 0),

with the output clamped to ``[-F, F]``.  There is no output bias; ``v_0`` is
kept as an all-zero placeholder so shifts and weights are indexed alike.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import make_rng

__all__ = [
    "NetworkArchitecture",
    "NetworkParams",
    "TrainSchedule",
    "TrainResult",
    "TrainingDivergedError",
    "CompositionDescriptor",
    "architecture_from_n",
    "init_glorot",
    "forward",
    "loss_and_gradient",
    "train",
    "prune_fraction_rule",
    "sparsity_at",
    "rate_phi",
    "entropy_bound",
    "params_to_dict",
    "params_from_dict",
    "save_network",
    "load_network",
]


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class NetworkArchitecture:
    depth: int
    widths: tuple
    sup_cap: float = 1.0
    target_nonzero: int | None = None

    def __post_init__(self):
        w = tuple(int(x) for x in self.widths)
        object.__setattr__(self, "widths", w)
        if self.depth < 1 or len(w) != self.depth + 2:
            raise ValueError(f"depth {self.depth} needs {self.depth + 2} widths, got {len(w)}")
        if min(w) < 1:
            raise ValueError("widths must be positive")
        if self.sup_cap < 1:
            raise ValueError("sup_cap F must be at least 1")
        if self.target_nonzero is not None and not 1 <= self.target_nonzero <= self.n_params:
            raise ValueError("target_nonzero must lie in [1, n_params]")

    @property
    def n_params(self) -> int:
        """Weights plus the hidden shifts ``v_1..v_L``."""
        p = self.widths
        return sum(p[j + 1] * p[j] for j in range(self.depth + 1)) + sum(p[1 : self.depth + 1])

    def to_dict(self) -> dict:
        return {"depth": self.depth, "widths": list(self.widths), "sup_cap": self.sup_cap,
                "target_nonzero": self.target_nonzero}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkArchitecture":
        return cls(int(d["depth"]), tuple(d["widths"]), float(d["sup_cap"]), d.get("target_nonzero"))


def architecture_from_n(n: int, d: int, F: float = 1.0) -> NetworkArchitecture:
    """Hidden width ``ceil(sqrt(2n))`` and depth ``ceil(log2(2n))``."""
    if n < 1:
        raise ValueError("n must be positive")
    width = math.isqrt(2 * n)
    if width * width < 2 * n:
        width += 1
    depth = max(1, (2 * n - 1).bit_length())  # ceil(log2(2n)) for integer 2n
    return NetworkArchitecture(depth, (d,) + (width,) * depth + (1,), F)


@dataclass
class NetworkParams:
    weights: list
    shifts: list
    wmasks: list
    smasks: list

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [v.copy() for v in self.shifts],
                             [m.copy() for m in self.wmasks], [m.copy() for m in self.smasks])

    def arrays(self) -> list:
        """Trainable arrays in a fixed order: ``W_0..W_L`` then ``v_1..v_L``."""
        return list(self.weights) + list(self.shifts[1:])

    def masks(self) -> list:
        return list(self.wmasks) + list(self.smasks[1:])

    def apply_masks(self) -> None:
        for a, m in zip(self.arrays(), self.masks()):
            a *= m

    def n_nonzero(self) -> int:
        return int(sum(np.count_nonzero(a) for a in self.arrays()))

    def n_total(self) -> int:
        return int(sum(a.size for a in self.arrays()))

    def frac_above_one(self) -> float:
        return float(sum(np.count_nonzero(np.abs(a) > 1.0) for a in self.arrays()) / self.n_total())


def _check_shapes(params: NetworkParams, arch: NetworkArchitecture) -> None:
    p = arch.widths
    for j, W in enumerate(params.weights):
        if W.shape != (p[j + 1], p[j]):
            raise ValueError(f"W_{j} has shape {W.shape}, expected {(p[j + 1], p[j])}")
    if len(params.weights) != arch.depth + 1 or len(params.shifts) != arch.depth + 1:
        raise ValueError("parameter list lengths do not match the depth")


def init_glorot(arch: NetworkArchitecture, seed) -> NetworkParams:
    """Weights uniform on ``+-sqrt(6 / (fan_in + fan_out))``, shifts zero, masks one."""
    rng = make_rng(seed)
    p = arch.widths
    weights, shifts = [], [np.zeros(p[0])]
    for j in range(arch.depth + 1):
        lim = math.sqrt(6.0 / (p[j] + p[j + 1]))
        weights.append(rng.uniform(-lim, lim, size=(p[j + 1], p[j])))
        if j >= 1:
            shifts.append(np.zeros(p[j]))
    wmasks = [np.ones_like(w) for w in weights]
    smasks = [np.zeros(p[0])] + [np.ones_like(v) for v in shifts[1:]]
    return NetworkParams(weights, shifts, wmasks, smasks)


def _forward_cache(params: NetworkParams, X: np.ndarray):
    acts = [X]
    pre = []
    y = X @ params.weights[0].T
    for j in range(1, len(params.weights)):
        z = y - params.shifts[j]
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
        y = a @ params.weights[j].T
    return y[:, 0], acts, pre


def forward(params: NetworkParams, arch: NetworkArchitecture, x) -> np.ndarray | float:
    """Clamped network output; a 1-D input gives a float, an ``(m, d)`` array gives ``m`` values."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != arch.widths[0]:
        raise ValueError(f"input has {X.shape[1]} features, network expects {arch.widths[0]}")
    _check_shapes(params, arch)
    raw, _, _ = _forward_cache(params, X)
    out = np.clip(raw, -arch.sup_cap, arch.sup_cap)
    return float(out[0]) if single else out


def loss_and_gradient(params: NetworkParams, arch: NetworkArchitecture, X, Y, l2: float = 0.0):
    """Mean squared error plus ``l2 * sum W^2`` and its gradient.

    The gradient list follows :meth:`NetworkParams.arrays`.  The clamp is the
    identity strictly inside ``(-F, F)`` and has zero slope outside.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).ravel()
    m = X.shape[0]
    if m == 0:
        raise ValueError("empty batch")
    F = arch.sup_cap
    raw, acts, pre = _forward_cache(params, X)
    out = np.clip(raw, -F, F)
    resid = out - Y
    penalty = sum(float(np.sum(W * W)) for W in params.weights)
    loss = float(np.mean(resid * resid)) + l2 * penalty

    dy = (2.0 / m) * resid * (np.abs(raw) < F)
    dy = dy[:, None]
    L = len(params.weights) - 1
    gW = [None] * (L + 1)
    gv = [None] * (L + 1)
    for j in range(L, 0, -1):
        gW[j] = dy.T @ acts[j]
        dz = (dy @ params.weights[j]) * (pre[j - 1] > 0)
        gv[j] = -dz.sum(axis=0)
        dy = dz
    gW[0] = dy.T @ acts[0]
    grads = [g + 2.0 * l2 * W for g, W in zip(gW, params.weights)] + gv[1:]
    grads = [g * msk for g, msk in zip(grads, params.masks())]
    return loss, grads


# ------------------------------------------------------------------ training


@dataclass(frozen=True)
class TrainSchedule:
    epochs: int = 1000
    batch_size: int = 64
    lr: float = 1e-3
    l2: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    prune_start: float = 0.25
    prune_every: int = 10

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TrainResult:
    params: NetworkParams
    final_loss: float
    trace: list = field(default_factory=list)
    nonzero_fraction: float = 1.0
    frac_above_one: float = 0.0


def sparsity_at(epoch: int, epochs: int, final: float, start_frac: float = 0.25) -> float:
    """Cubic ramp from 0 at ``start_frac * epochs`` to ``final`` at the last epoch."""
    start = math.ceil(start_frac * epochs)
    last = epochs - 1
    if epoch < start:
        return 0.0
    if last <= start:
        return final
    t = min(1.0, (epoch - start) / (last - start))
    return final * (1.0 - (1.0 - t) ** 3)


def _prune_to(params: NetworkParams, n_zero: int) -> None:
    """Grow the masks until ``n_zero`` trainable entries are masked out; masks never regrow."""
    arrays, masks = params.arrays(), params.masks()
    flat_mask = np.concatenate([m.ravel() for m in masks])
    already = int(np.count_nonzero(flat_mask == 0))
    extra = n_zero - already
    if extra <= 0:
        return
    mag = np.concatenate([np.abs(a).ravel() for a in arrays])
    mag[flat_mask == 0] = np.inf
    # stable sort keeps the choice deterministic among equal magnitudes
    drop = np.argsort(mag, kind="stable")[:extra]
    flat_mask[drop] = 0.0
    offset = 0
    for m in masks:
        m.ravel()[:] = flat_mask[offset : offset + m.size]
        offset += m.size
    params.apply_masks()


def train(params: NetworkParams, arch: NetworkArchitecture, X, Y, schedule: TrainSchedule = TrainSchedule(),
          prune_fraction: float = 0.0, seed=0) -> TrainResult:
    """Minibatch Adam on the penalized least-squares loss with magnitude pruning.

    ``params`` is copied, never modified.  The trace holds the full-data
    training MSE after every epoch.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).ravel()
    n = X.shape[0]
    if n == 0:
        raise ValueError("training data is empty")
    if not 0.0 <= prune_fraction < 1.0:
        raise ValueError("prune_fraction must lie in [0, 1)")
    total = params.n_total()
    final_zero = int(round(prune_fraction * total))
    if total - final_zero < 1:
        raise ValueError("prune_fraction leaves no nonzero parameters")

    rng = make_rng(seed)
    P = params.copy()
    P.apply_masks()
    m1 = [np.zeros_like(a) for a in P.arrays()]
    m2 = [np.zeros_like(a) for a in P.arrays()]
    bs = min(n, schedule.batch_size)
    step = 0
    trace = []
    start = math.ceil(schedule.prune_start * schedule.epochs)
    for epoch in range(schedule.epochs):
        if prune_fraction > 0 and epoch >= start and (
            (epoch - start) % schedule.prune_every == 0 or epoch == schedule.epochs - 1
        ):
            frac = sparsity_at(epoch, schedule.epochs, prune_fraction, schedule.prune_start)
            _prune_to(P, final_zero if epoch == schedule.epochs - 1 else int(round(frac * total)))
        order = rng.permutation(n)
        for b in range(0, n, bs):
            idx = order[b : b + bs]
            loss, grads = loss_and_gradient(P, arch, X[idx], Y[idx], schedule.l2)
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss {loss} at epoch {epoch}, step {step}")
            step += 1
            c1 = 1.0 - schedule.beta1**step
            c2 = 1.0 - schedule.beta2**step
            for a, g, ma, va, msk in zip(P.arrays(), grads, m1, m2, P.masks()):
                ma *= schedule.beta1
                ma += (1.0 - schedule.beta1) * g
                va *= schedule.beta2
                va += (1.0 - schedule.beta2) * g * g
                a -= schedule.lr * (ma / c1) / (np.sqrt(va / c2) + schedule.eps)
                a *= msk
        raw, _, _ = _forward_cache(P, X)
        mse = float(np.mean((np.clip(raw, -arch.sup_cap, arch.sup_cap) - Y) ** 2))
        if not math.isfinite(mse):
            raise TrainingDivergedError(f"non-finite training loss after epoch {epoch}")
        trace.append(mse)
    nz = 1.0 - float(np.count_nonzero(np.concatenate([m.ravel() for m in P.masks()]) == 0)) / total
    return TrainResult(P, trace[-1] if trace else float("nan"), trace, nz, P.frac_above_one())


# --------------------------------------------------------- theory formulas


def prune_fraction_rule(m: int, phi_m: float, total_params: int) -> float:
    """Zero fraction ``1 - 2 m log(m) phi_m / P`` clamped to ``[0, 1 - 1/P]``."""
    if total_params <= 0:
        raise ValueError("total_params must be positive")
    raw = 1.0 - 2.0 * m * math.log(m) * phi_m / total_params
    return max(0.0, min(1.0 - 1.0 / total_params, raw))


@dataclass(frozen=True)
class CompositionDescriptor:
    q: int
    t: tuple
    alpha: tuple

    def __post_init__(self):
        t = tuple(int(x) for x in self.t)
        a = tuple(float(x) for x in self.alpha)
        if self.q < 0 or len(t) != self.q + 1 or len(a) != self.q + 1:
            raise ValueError("t and alpha need q + 1 entries")
        if min(t) < 1 or min(a) <= 0:
            raise ValueError("t must be positive integers and alpha positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "alpha", a)


def rate_phi(c: CompositionDescriptor, n: int):
    """``max_i n^{-2 a*_i / (2 a*_i + t_i)}`` with ``a*_i = a_i prod_{l > i} min(a_l, 1)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    a_star = []
    for i in range(c.q + 1):
        a_star.append(c.alpha[i] * math.prod(min(a, 1.0) for a in c.alpha[i + 1 :]))
    phi = max(n ** (-2.0 * a / (2.0 * a + t)) for a, t in zip(a_star, c.t))
    return phi, a_star


def entropy_bound(L: int, p0: int, pL1: int, s: int, delta: float) -> float:
    """``(s + 1) log(2^{2L+5} / delta (L + 1) p0^2 pL1^2 s^{2L})`` in natural log."""
    if min(L, p0, pL1, s) <= 0:
        raise ValueError("L, p0, pL1 and s must be positive")
    if not delta > 0:
        raise ValueError("delta must be positive")
    inner = ((2 * L + 5) * math.log(2.0) - math.log(delta) + math.log(L + 1)
             + 2 * math.log(p0) + 2 * math.log(pL1) + 2 * L * math.log(s))
    return (s + 1) * inner


# --------------------------------------------------------------- persistence


def params_to_dict(params: NetworkParams, arch: NetworkArchitecture, seed=None) -> dict:
    return {
        "arch": arch.to_dict(),
        "F": arch.sup_cap,
        "seed": seed,
        "weights": [w.tolist() for w in params.weights],
        "shifts": [v.tolist() for v in params.shifts],
        "wmasks": [m.astype(int).tolist() for m in params.wmasks],
        "smasks": [m.astype(int).tolist() for m in params.smasks],
    }


def params_from_dict(d: dict):
    arch = NetworkArchitecture.from_dict(d["arch"])
    p = arch.widths

    def mat(rows, j):
        return np.array(rows, dtype=float).reshape(p[j + 1], p[j])

    params = NetworkParams(
        [mat(w, j) for j, w in enumerate(d["weights"])],
        [np.array(v, dtype=float) for v in d["shifts"]],
        [mat(m, j) for j, m in enumerate(d["wmasks"])],
        [np.array(m, dtype=float) for m in d["smasks"]],
    )
    return params, arch


def save_network(path, params: NetworkParams, arch: NetworkArchitecture, seed=None) -> Path:
    # json writes floats with repr, which round-trips every double exactly
    path = Path(path)
    path.write_text(json.dumps(params_to_dict(params, arch, seed)))
    return path


def load_network(path):
    return params_from_dict(json.loads(Path(path).read_text()))

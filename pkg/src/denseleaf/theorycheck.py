"""Desk-scale numerical checks of the probabilistic bounds behind the estimator.

Probabilistic inequalities become assertions by allowing three standard
errors of slack; deterministic quantities are computed by tensor
Gauss-Legendre quadrature.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ._rng import make_rng
from .kernels import KernelSpec, build_order_kernel, eval_kernel, gauss_legendre

__all__ = [
    "CheckReport",
    "check_poissonization",
    "poissonization_instance",
    "poissonization_exact",
    "bias_bound",
    "smoothed_truth",
    "check_bias_bound",
    "noise_variance_bound",
    "check_noise_variance",
    "run_default_checks",
]


@dataclass(frozen=True)
class CheckReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    trials: int
    inconclusive: bool = False
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.lhs <= self.rhs + self.slack))

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _uniform_sampler(k: int, rng) -> np.ndarray:
    return rng.random(k)


def check_poissonization(n: int, statistic, in_set, trials: int = 20_000, seed: int = 0,
                         sampler=_uniform_sampler, name: str = "poissonization") -> CheckReport:
    """``P(sum_{i<=n} h(X_i) in A) <= sqrt(2 e pi n) P(sum_{i<=M} h(X_i) in A)``, ``M ~ Poisson(n)``.

    ``statistic`` maps an array of draws to per-draw values of ``h``;
    ``in_set`` maps an array of sums to booleans.
    """
    if trials < 10_000:
        raise ValueError("need at least 10^4 trials")
    rng = make_rng(seed)
    fixed = statistic(sampler(trials * n, rng)).reshape(trials, n).sum(axis=1)
    p_fixed = float(np.mean(in_set(fixed)))
    M = rng.poisson(n, size=trials)
    vals = statistic(sampler(int(M.sum()), rng))
    owner = np.repeat(np.arange(trials), M)
    pois = np.bincount(owner, weights=vals, minlength=trials)
    p_pois = float(np.mean(in_set(pois)))
    factor = math.sqrt(2.0 * math.e * math.pi * n)
    se_l = math.sqrt(p_fixed * (1 - p_fixed) / trials)
    se_r = math.sqrt(p_pois * (1 - p_pois) / trials)
    slack = 3.0 * math.sqrt(se_l**2 + (factor * se_r) ** 2)
    return CheckReport(name, p_fixed, factor * p_pois, slack, trials,
                       inconclusive=p_pois == 0.0 and p_fixed > 0.0)


def poissonization_instance(n: int):
    """``h = 1[x <= 1/2]``, ``A = {sum >= n}`` under the uniform density."""
    return (lambda x: (np.asarray(x) <= 0.5).astype(float)), (lambda s: np.asarray(s) >= n - 1e-9)


def poissonization_exact(n: int) -> tuple:
    """Exact sides for :func:`poissonization_instance`: ``2^{-n}`` and ``P(Poisson(n/2) >= n)``."""
    return 0.5**n, float(stats.poisson.sf(n - 1, n / 2.0))


# ----------------------------------------------------------- kernel smoothing


def _window_rule(d: int, per_axis: int = 16, pieces: int = 2):
    x, w = gauss_legendre(per_axis, 0.0, 1.0)
    edges = np.linspace(-1.0, 1.0, pieces + 1)
    nodes = np.concatenate([a + (b - a) * x for a, b in zip(edges[:-1], edges[1:])])
    weights = np.concatenate([(b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    grids = np.meshgrid(*([nodes] * d), indexing="ij")
    V = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack(np.meshgrid(*([weights] * d), indexing="ij"), axis=0).reshape(d, -1), axis=0)
    return V, W


def smoothed_truth(truth, k: KernelSpec, h: float, x) -> np.ndarray:
    """``int h^{-d} prod_r K((u_r - x_r)/h) f_0(u) du`` at each row of ``x``, by quadrature."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[1]
    if d > 3:
        raise ValueError("kernel-smoothing quadrature is restricted to d <= 3")
    V, W = _window_rule(d)
    kw = W * np.prod(eval_kernel(k, V), axis=1)  # substitution u = x + h v
    out = np.empty(x.shape[0])
    step = max(1, 1_000_000 // V.shape[0])
    for s in range(0, x.shape[0], step):
        pts = x[s : s + step, None, :] + h * V[None, :, :]
        out[s : s + step] = truth.pdf(pts.reshape(-1, d)).reshape(-1, V.shape[0]) @ kw
    return out


def bias_bound(h: float, d: int, beta: float, k: KernelSpec, F: float) -> float:
    return h**beta * d**beta * k.sup_norm**d * F


def check_bias_bound(truth, k: KernelSpec, h: float, probe_points, beta: float | None = None,
                     F: float | None = None) -> CheckReport:
    """Largest ``|E[eps | X = x]|`` over the probes against ``h^b d^b ||K||^d F``."""
    beta = float(truth.beta if beta is None else beta)
    F = float(truth.holder_bound if F is None else F)
    if k.order != math.floor(beta):
        raise ValueError(f"kernel order {k.order} must equal floor(beta) = {math.floor(beta)}")
    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    P = np.atleast_2d(np.asarray(probe_points, dtype=float))
    bias = smoothed_truth(truth, k, h, P) - truth.pdf(P)
    lhs = float(np.max(np.abs(bias)))
    return CheckReport(f"bias_bound(h={h:g})", lhs, bias_bound(h, P.shape[1], beta, k, F), 1e-12, P.shape[0])


def noise_variance_bound(d: int, k: KernelSpec, F: float) -> float:
    return 65.0 * F**2 * 2.0 ** (2 * d) * k.sup_norm ** (2 * d)


def check_noise_variance(truth, k: KernelSpec, h: float, n: int, trials: int = 20_000, seed: int = 0,
                         F: float | None = None) -> CheckReport:
    """Monte-Carlo ``E|eps - E[eps | X]|^2`` for a KDE on ``n`` points against its bound."""
    if trials < 10_000:
        raise ValueError("need at least 10^4 trials")
    F = float(truth.holder_bound if F is None else F)
    d = truth.dim
    rng = make_rng(seed)
    X = truth.sample(trials, rng).points
    Xk = truth.sample(trials * n, rng).points.reshape(trials, n, d)
    Y = eval_kernel(k, (Xk - X[:, None, :]) / h).prod(axis=2).sum(axis=1) / (n * h**d)
    centred = Y - smoothed_truth(truth, k, h, X)
    sq = centred**2
    est = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(trials))
    return CheckReport(f"noise_variance(h={h:g}, n={n})", est, noise_variance_bound(d, k, F), 3.0 * se, trials)


def run_default_checks(seed: int = 0, trials: int = 20_000) -> list:
    """The desk-scale check suite: Poissonization at n=5, bias on a grid of bandwidths, noise variance."""
    from .densities import LinearProductDensity

    reports = []
    stat, in_set = poissonization_instance(5)
    reports.append(check_poissonization(5, stat, in_set, trials, seed))
    box = build_order_kernel(1)
    for d in (1, 2):
        truth = LinearProductDensity(d)
        for e in range(2, 7):
            h = 2.0**-e
            g = np.linspace(h, 1.0 - h, 9)
            probes = np.stack(np.meshgrid(*([g] * d), indexing="ij"), -1).reshape(-1, d)
            reports.append(check_bias_bound(truth, box, h, probes))
    truth = LinearProductDensity(1)
    reports.append(check_noise_variance(truth, box, 0.25, 8, trials, seed))
    return reports

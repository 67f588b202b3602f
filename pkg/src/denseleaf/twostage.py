"""Split-data (SD) and full-data (FD) two-stage estimators and the plain KDE reference.

Stage one turns the sample into regression pairs ``(X_i, f_KDE(X_i))`` with an
undersmoothed KDE; stage two fits a pruned ReLU network to those pairs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import derive_seed
from .kde import (
    _as_points,
    generate_responses,
    kde_eval,
    read_dataset_csv,
    reference_shape,
    theory_shape,
    write_dataset_csv,
)
from .kernels import KernelSpec, build_order_kernel, eval_kernel
from .network import (
    NetworkArchitecture,
    NetworkParams,
    TrainSchedule,
    architecture_from_n,
    forward,
    init_glorot,
    params_from_dict,
    params_to_dict,
    prune_fraction_rule,
    train,
)

__all__ = [
    "METHODS",
    "NetworkEstimator",
    "KdeEstimator",
    "EstimatorHandle",
    "RiskReport",
    "fit_sd",
    "fit_fd",
    "fit_kde_reference",
    "evaluate",
    "evaluate_on",
    "save_handle",
    "load_handle",
    "default_phi",
]

METHODS = ("SD", "FD", "KDE")


def default_phi(m: int) -> float:
    """Rate used in the pruning rule; ``m^{-1/2}`` for every simulated family."""
    return m**-0.5


@dataclass(frozen=True)
class NetworkEstimator:
    params: NetworkParams
    arch: NetworkArchitecture

    def __call__(self, X) -> np.ndarray:
        return forward(self.params, self.arch, np.atleast_2d(X))


@dataclass(frozen=True)
class KdeEstimator:
    points: np.ndarray
    kernel: KernelSpec
    h: float

    def __call__(self, X) -> np.ndarray:
        return kde_eval(self.points, self.kernel, self.h, np.atleast_2d(X))


@dataclass(frozen=True)
class EstimatorHandle:
    method: str
    estimator: object
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        want = KdeEstimator if self.method == "KDE" else NetworkEstimator
        if not isinstance(self.estimator, want):
            raise TypeError(f"{self.method} handle needs a {want.__name__}")

    def __call__(self, X) -> np.ndarray:
        return self.estimator(X)

    @property
    def train_error(self) -> float:
        return float(self.provenance.get("train_error", float("nan")))


@dataclass(frozen=True)
class RiskReport:
    test_error: float
    zero_baseline: float
    train_error: float
    optimization_gap_proxy: float
    n_test: int


def _split(data_2n) -> tuple:
    X = _as_points(data_2n)
    N = X.shape[0]
    if N % 2:
        raise ValueError(f"two-stage fitting needs an even sample size, got {N}")
    n = N // 2
    if n < 2:
        raise ValueError("need at least 2n = 4 points")
    return X, n


def _fit_network(method, Xr, Y, m, d, kernel, h, const, schedule, seed, F, phi, extra):
    F = max(1.0, float(np.max(Y))) if F is None else float(F)
    arch = architecture_from_n(m, d, F)
    frac = prune_fraction_rule(m, phi(m), arch.n_params) if m >= 2 else 0.0
    init_seed = derive_seed(seed, "init")
    result = train(init_glorot(arch, init_seed), arch, Xr, Y, schedule, frac, derive_seed(seed, "batches"))
    prov = {
        "method": method,
        "seed": seed,
        "kernel_order": kernel.order,
        "bandwidth": h,
        "bandwidth_constant": const,
        "m": m,
        "sup_cap": F,
        "prune_fraction": frac,
        "nonzero_fraction": result.nonzero_fraction,
        "frac_params_above_one": result.frac_above_one,
        "train_error": result.final_loss,
        "trace_first": result.trace[0] if result.trace else float("nan"),
        "trace_last": result.final_loss,
        "epochs": schedule.epochs,
        "responses": Y,
        **extra,
    }
    return EstimatorHandle(method, NetworkEstimator(result.params, arch), prov)


def fit_sd(data_2n, kernel: KernelSpec, c1: float, schedule: TrainSchedule = TrainSchedule(),
           seed: int = 0, F: float | None = None, phi=default_phi) -> EstimatorHandle:
    """First half is the regression set, second half feeds the KDE.

    ``F`` defaults to ``max(1, max Y)``.
    """
    X, n = _split(data_2n)
    d = X.shape[1]
    h = c1 * theory_shape(n, d)
    Xr, Xk = X[:n], X[n:]
    Y = generate_responses(Xk, Xr, kernel, h)
    return _fit_network("SD", Xr, Y, n, d, kernel, h, c1, schedule, seed, F, phi, {})


def fit_fd(data_2n, kernel: KernelSpec, c2: float, schedule: TrainSchedule = TrainSchedule(),
           seed: int = 0, F: float | None = None, phi=default_phi,
           self_inclusion: bool = True) -> EstimatorHandle:
    """Both stages on all ``2n`` points; ``self_inclusion=False`` gives leave-one-out responses."""
    X, _ = _split(data_2n)
    N, d = X.shape
    h = c2 * theory_shape(N, d)
    Y = kde_eval(X, kernel, h, X)
    if not self_inclusion:
        own = eval_kernel(kernel, 0.0) ** d / (N * h**d)
        Y = (Y - own) * N / (N - 1)
    return _fit_network("FD", X, Y, N, d, kernel, h, c2, schedule, seed, F, phi,
                        {"self_inclusion": self_inclusion})


def fit_kde_reference(data_2n, kernel: KernelSpec, c3: float, beta: float) -> EstimatorHandle:
    """Plain KDE on every point with bandwidth ``c3 N^{-1/(2 beta + d)}``."""
    X = _as_points(data_2n)
    N, d = X.shape
    h = c3 * reference_shape(beta)(N, d)
    prov = {"method": "KDE", "kernel_order": kernel.order, "bandwidth": h,
            "bandwidth_constant": c3, "beta": beta, "train_error": float("nan")}
    return EstimatorHandle("KDE", KdeEstimator(X.copy(), kernel, h), prov)


def evaluate_on(estimator, T: np.ndarray, f0T: np.ndarray) -> RiskReport:
    """Risk on a fixed test sample with precomputed truth values."""
    fh = np.asarray(estimator(T), dtype=float)
    train_error = estimator.train_error if isinstance(estimator, EstimatorHandle) else float("nan")
    return RiskReport(
        test_error=float(np.mean((fh - f0T) ** 2)),
        zero_baseline=float(np.mean(f0T**2)),
        train_error=train_error,
        optimization_gap_proxy=float("nan"),
        n_test=int(T.shape[0]),
    )


def evaluate(handle, truth, n_test: int, seed: int) -> RiskReport:
    """Monte-Carlo risk: mean squared deviation from the truth at ``n_test`` fresh draws.

    ``handle`` may also be any callable mapping an ``(m, d)`` array to values.
    """
    if n_test < 1:
        raise ValueError("n_test must be positive")
    T = truth.sample(n_test, seed).points
    return evaluate_on(handle, T, truth.pdf(T))


# --------------------------------------------------------------- persistence


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def save_handle(handle: EstimatorHandle, directory) -> Path:
    """``manifest.json`` plus ``network.json`` (SD/FD) or ``kde_points.csv`` (KDE)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"method": handle.method,
                "provenance": {k: _jsonable(v) for k, v in handle.provenance.items()}}
    if handle.method == "KDE":
        est = handle.estimator
        write_dataset_csv(est.points, directory / "kde_points.csv")
        manifest.update(kernel=est.kernel.to_dict(), h=est.h, payload="kde_points.csv")
    else:
        est = handle.estimator
        blob = params_to_dict(est.params, est.arch, handle.provenance.get("seed"))
        (directory / "network.json").write_text(json.dumps(blob))
        manifest["payload"] = "network.json"
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return directory


def load_handle(directory) -> EstimatorHandle:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    prov = manifest.get("provenance", {})
    if manifest["method"] == "KDE":
        pts = read_dataset_csv(directory / manifest["payload"]).points
        est = KdeEstimator(pts, build_order_kernel(manifest["kernel"]["order"]), float(manifest["h"]))
    else:
        params, arch = params_from_dict(json.loads((directory / manifest["payload"]).read_text()))
        est = NetworkEstimator(params, arch)
    if "train_error" in prov and prov["train_error"] is None:
        prov["train_error"] = float("nan")
    return EstimatorHandle(manifest["method"], est, prov)

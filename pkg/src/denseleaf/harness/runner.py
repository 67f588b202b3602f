"""Experiment runner: calibration, replicated fits, shared test sample, CSV/JSON output."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .._rng import derive_seed
from ..densities import make_model
from ..kde import cv_calibrate, reference_shape, theory_shape
from ..kernels import build_order_kernel
from ..twostage import evaluate_on, fit_fd, fit_kde_reference, fit_sd
from .config import ExperimentConfig

__all__ = [
    "RESULT_COLUMNS",
    "ResultRow",
    "calibrate",
    "nearest_rank",
    "row_seed",
    "run_experiment",
    "read_results",
    "summarize",
    "resolve_threads",
]

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("model", "d", "n", "method", "replicate", "seed", "train_error", "test_error",
                  "zero_baseline", "optimization_gap_proxy", "wall_time_seconds", "error")


@dataclass
class ResultRow:
    model: str
    d: int
    n: int
    method: str
    replicate: int
    seed: int
    train_error: float
    test_error: float
    zero_baseline: float
    optimization_gap_proxy: float
    wall_time_seconds: float
    error: str = ""


def row_seed(master_seed: int, model: str, n: int, method: str, replicate: int) -> int:
    return derive_seed(master_seed, model, n, method, replicate)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("DENSELEAF_THREADS", "1"))
    return max(1, int(threads))


def calibrate(cfg: ExperimentConfig, truth=None) -> dict:
    """Bandwidth constants by least-squares CV on ``n_datasets`` fresh samples.

    Each constant is searched at the sample size its KDE will see: ``c1`` and
    ``c3`` on samples of ``n_cal`` points, ``c2`` (full-data KDE on twice as
    many points) on samples of ``2 n_cal``.
    """
    cal = cfg.calibration
    if cal.constants:
        return {k: float(cal.constants[k]) for k in ("c1", "c2", "c3")}
    truth = truth or make_model(cfg.model.to_dict())
    kernel = build_order_kernel(cfg.kernel_order)
    fold_seed = derive_seed(cfg.master_seed, "folds")
    grid = (cal.grid_lo, cal.grid_hi, cal.grid_step, cal.folds)

    def draw(size):
        return [truth.sample(size, derive_seed(cfg.master_seed, "calibration", size, i))
                for i in range(cal.n_datasets)]

    small, large = draw(cal.n_cal), draw(2 * cal.n_cal)
    return {
        "c1": cv_calibrate(small, kernel, *grid, shape=theory_shape, seed=fold_seed),
        "c2": cv_calibrate(large, kernel, *grid, shape=theory_shape, seed=fold_seed),
        "c3": cv_calibrate(small, kernel, *grid, shape=reference_shape(cfg.kde_beta), seed=fold_seed),
    }


# per-process state for pool workers
_STATE: dict = {}


def _init_worker(cfg_dict: dict, constants: dict) -> None:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    truth = make_model(cfg.model.to_dict())
    T = truth.sample(cfg.n_test, derive_seed(cfg.master_seed, "test")).points
    _STATE.update(cfg=cfg, constants=constants, truth=truth, T=T, f0T=truth.pdf(T),
                  kernel=build_order_kernel(cfg.kernel_order), data={})


def _training_sample(n: int, replicate: int):
    cfg, truth = _STATE["cfg"], _STATE["truth"]
    tag = (n, replicate) if cfg.fresh_sample_per_replicate else (n,)
    if tag not in _STATE["data"]:
        _STATE["data"].clear()
        _STATE["data"][tag] = truth.sample(n, derive_seed(cfg.master_seed, cfg.model.family, "train", *tag))
    return _STATE["data"][tag]


def _run_job(job: tuple) -> ResultRow:
    n, method, replicate = job
    cfg, c = _STATE["cfg"], _STATE["constants"]
    seed = row_seed(cfg.master_seed, cfg.model.family, n, method, replicate)
    t0 = time.perf_counter()
    try:
        with threadpool_limits(1):
            data = _training_sample(n, replicate)
            if method == "SD":
                handle = fit_sd(data, _STATE["kernel"], c["c1"], cfg.train, seed)
            elif method == "FD":
                handle = fit_fd(data, _STATE["kernel"], c["c2"], cfg.train, seed,
                                self_inclusion=cfg.fd_self_inclusion)
            else:
                handle = fit_kde_reference(data, _STATE["kernel"], c["c3"], cfg.kde_beta)
            rep = evaluate_on(handle, _STATE["T"], _STATE["f0T"])
        err = ""
        vals = (rep.train_error, rep.test_error, rep.zero_baseline)
    except Exception as exc:  # recorded per row, the run continues
        log.exception("job %s failed", job)
        err = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        vals = (math.nan, math.nan, float(np.mean(_STATE["f0T"] ** 2)))
    wall = time.perf_counter() - t0 if cfg.record_wall_time else 0.0
    return ResultRow(cfg.model.family, cfg.model.d, n, method, replicate, seed, *vals, math.nan, wall, err)


def _jobs(cfg: ExperimentConfig) -> list:
    jobs = []
    for n in cfg.sample_sizes:
        for method in ("SD", "FD", "KDE"):
            if method not in cfg.methods:
                continue
            reps = 1 if method == "KDE" else cfg.replicates
            jobs.extend((int(n), method, r) for r in range(reps))
    return jobs


def _fill_gap_proxy(rows: list) -> None:
    """Training error minus the smallest training error among replicates of the same (n, method)."""
    best: dict = {}
    for r in rows:
        if math.isfinite(r.train_error):
            key = (r.n, r.method)
            best[key] = min(best.get(key, math.inf), r.train_error)
    for r in rows:
        key = (r.n, r.method)
        if math.isfinite(r.train_error) and key in best:
            r.optimization_gap_proxy = r.train_error - best[key]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: list, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in RESULT_COLUMNS])
    return path


def read_results(path) -> list:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for rec in reader:
            rows.append(ResultRow(
                rec["model"], int(rec["d"]), int(rec["n"]), rec["method"], int(rec["replicate"]),
                int(rec["seed"]), float(rec["train_error"]), float(rec["test_error"]),
                float(rec["zero_baseline"]), float(rec["optimization_gap_proxy"]),
                float(rec["wall_time_seconds"]), rec["error"]))
    return rows


def nearest_rank(values, p: float) -> float:
    """Nearest-rank quantile: the ``ceil(p k)``-th smallest of ``k`` values (the minimum at ``p = 0``)."""
    v = sorted(values)
    if not v:
        return math.nan
    rank = max(1, math.ceil(p * len(v)))
    return v[rank - 1]


def _none_if_nan(x: float):
    return None if not math.isfinite(x) else x


def summarize(rows: list) -> dict:
    """``{model: {d: {n: {method: {q0..q4, min_train_test_error, zero_baseline}}}}}``."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.model, r.d, r.n, r.method), []).append(r)
    out: dict = {}
    for (model, d, n, method), grp in groups.items():
        ok = [r for r in grp if not r.error and math.isfinite(r.test_error)]
        errs = [r.test_error for r in ok]
        entry = {f"q{i}": _none_if_nan(nearest_rank(errs, i / 4)) for i in range(5)}
        trained = [r for r in ok if math.isfinite(r.train_error)]
        best = min(trained, key=lambda r: (r.train_error, r.replicate)) if trained else None
        entry["min_train_test_error"] = best.test_error if best else None
        entry["zero_baseline"] = grp[0].zero_baseline
        out.setdefault(model, {}).setdefault(str(d), {}).setdefault(str(n), {})[method] = entry
    return out


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> list:
    """Run the full protocol and write ``results.csv``, ``summary.json`` and ``calibration.json``."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    truth = make_model(cfg.model.to_dict())
    constants = calibrate(cfg, truth)
    (out / "calibration.json").write_text(json.dumps(constants, indent=2, sort_keys=True))
    log.info("bandwidth constants %s", constants)

    jobs = _jobs(cfg)
    threads = resolve_threads(threads)
    cfg_dict = cfg.to_dict()
    if threads == 1:
        _init_worker(cfg_dict, constants)
        rows = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(threads, initializer=_init_worker, initargs=(cfg_dict, constants)) as ex:
            rows = list(ex.map(_run_job, jobs))
    _fill_gap_proxy(rows)
    write_results(rows, out / "results.csv")
    (out / "summary.json").write_text(json.dumps(summarize(rows), indent=2, sort_keys=True))
    return rows

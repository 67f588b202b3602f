"""Plot-ready CSVs from a results file: boxplot summaries and train/test scatter fits."""
from __future__ import annotations

import csv
import math
from pathlib import Path

from .runner import nearest_rank, read_results

__all__ = ["least_squares_line", "emit_plot_data"]


def least_squares_line(x, y) -> tuple:
    """Slope and intercept of the least-squares line; NaN when ``x`` has no spread."""
    n = len(x)
    if n == 0:
        return math.nan, math.nan
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    if sxx == 0:
        return math.nan, math.nan
    slope = sxy / sxx
    return slope, my - slope * mx


def _write(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return path


def emit_plot_data(results_path, kind: str, out_dir=None) -> list:
    """Write ``boxplot.csv`` or ``scatter.csv`` + ``scatter_fit.csv`` next to the results.

    Returns the written paths.
    """
    results_path = Path(results_path)
    if not results_path.is_file():
        raise FileNotFoundError(results_path)
    out_dir = Path(out_dir) if out_dir else results_path.parent
    rows = [r for r in read_results(results_path) if not r.error and math.isfinite(r.test_error)]
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.model, r.d, r.n, r.method), []).append(r)
    keys = sorted(groups, key=lambda k: (k[0], k[1], k[2], ("SD", "FD", "KDE").index(k[3])))

    if kind == "boxplot":
        out = []
        for key in keys:
            grp = groups[key]
            errs = [r.test_error for r in grp]
            trained = [r for r in grp if math.isfinite(r.train_error)]
            marker = min(trained, key=lambda r: (r.train_error, r.replicate)).test_error if trained else math.nan
            out.append(list(key) + [nearest_rank(errs, i / 4) for i in range(5)]
                       + [marker, grp[0].zero_baseline, len(grp)])
        header = ["model", "d", "n", "method", "q0", "q1", "q2", "q3", "q4",
                  "min_train_test_error", "zero_baseline", "count"]
        return [_write(out_dir / "boxplot.csv", header, out)]

    if kind == "scatter":
        pts, fits = [], []
        for key in keys:
            grp = [r for r in groups[key] if math.isfinite(r.train_error)]
            if not grp:
                continue
            for r in grp:
                pts.append(list(key) + [r.replicate, r.train_error, r.test_error])
            slope, intercept = least_squares_line([r.train_error for r in grp], [r.test_error for r in grp])
            fits.append(list(key) + [slope, intercept, len(grp)])
        return [
            _write(out_dir / "scatter.csv",
                   ["model", "d", "n", "method", "replicate", "train_error", "test_error"], pts),
            _write(out_dir / "scatter_fit.csv",
                   ["model", "d", "n", "method", "slope", "intercept", "count"], fits),
        ]
    raise ValueError(f"kind must be 'boxplot' or 'scatter', got {kind!r}")

"""A scaled-down run of the full protocol, then plot-ready CSVs.

Run:  python3 demos/small_experiment.py [output_dir]

Uses fixed bandwidth constants and 200 training epochs to finish in a
minute or two; `denseleaf run --profile desk` is the real thing.
"""
import json
import sys
from pathlib import Path

from denseleaf.harness import ExperimentConfig, emit_plot_data, run_experiment

out = Path(sys.argv[1] if len(sys.argv) > 1 else "runs/demo")
cfg = ExperimentConfig.from_dict({
    "model": {"family": "BTm", "d": 3, "seed": 1},
    "sample_sizes": [200, 800],
    "replicates": 4,
    "n_test": 20_000,
    "train": {"epochs": 200},
    "calibration": {"constants": {"c1": 0.6, "c2": 0.6, "c3": 0.7}},
    "output_dir": str(out),
})
rows = run_experiment(cfg)
print(f"{len(rows)} rows in {out / 'results.csv'}")

summary = json.loads((out / "summary.json").read_text())["BTm"]["3"]
for n, methods in summary.items():
    for m, e in methods.items():
        marker = "" if e["min_train_test_error"] is None else f"  best-train replicate {e['min_train_test_error']:.3f}"
        print(f"n={n:>4} {m:3s}: median {e['q2']:.3f}  [{e['q0']:.3f}, {e['q4']:.3f}]{marker}")

for p in emit_plot_data(out / "results.csv", "boxplot") + emit_plot_data(out / "results.csv", "scatter"):
    print("wrote", p)

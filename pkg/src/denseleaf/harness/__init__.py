"""Experiment harness: configuration, runner, plot data and the command line."""
from .config import PROFILES, CalibrationConfig, ConfigError, ExperimentConfig, ModelSpec, load_config
from .plotdata import emit_plot_data, least_squares_line
from .runner import RESULT_COLUMNS, ResultRow, calibrate, read_results, row_seed, run_experiment, summarize

__all__ = [
    "PROFILES", "CalibrationConfig", "ConfigError", "ExperimentConfig", "ModelSpec", "load_config",
    "emit_plot_data", "least_squares_line",
    "RESULT_COLUMNS", "ResultRow", "calibrate", "read_results", "row_seed", "run_experiment", "summarize",
]

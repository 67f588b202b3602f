"""Declarative experiment description, loaded from JSON."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..densities import FAMILIES
from ..network import TrainSchedule
from ..twostage import METHODS

__all__ = ["ConfigError", "ModelSpec", "CalibrationConfig", "ExperimentConfig", "load_config", "PROFILES"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str = "NBm"
    d: int = 4
    seed: int = 1
    resolution: int = 4096
    shift_rule: str = "aligned"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CalibrationConfig:
    grid_lo: float = 0.05
    grid_hi: float = 1.1
    grid_step: float = 0.005
    folds: int = 50
    n_cal: int = 200
    n_datasets: int = 5
    # skip cross-validation when given, e.g. {"c1": 0.4, "c2": 0.4, "c3": 0.6}
    constants: dict | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    sample_sizes: tuple = (200, 1000)
    replicates: int = 10
    methods: tuple = METHODS
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    n_test: int = 100_000
    train: TrainSchedule = field(default_factory=TrainSchedule)
    kernel_order: int = 0
    kde_beta: float = 0.5
    master_seed: int = 0
    output_dir: str = "runs/default"
    fresh_sample_per_replicate: bool = False
    fd_self_inclusion: bool = True
    record_wall_time: bool = True

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not self.sample_sizes:
            raise ConfigError("sample_sizes must be non-empty")
        if any(int(n) < 4 or int(n) % 2 for n in self.sample_sizes):
            raise ConfigError("sample sizes must be even and at least 4")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}, got {list(self.methods)}")
        if self.model.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.model.family!r}")
        if not self.calibration.grid_lo < self.calibration.grid_hi:
            raise ConfigError("calibration grid_lo must be below grid_hi")
        if self.n_test < 1:
            raise ConfigError("n_test must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sample_sizes"] = list(self.sample_sizes)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known - {"profile"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = PROFILES[raw.pop("profile", "desk")]
        try:
            kw = {}
            if "model" in raw:
                kw["model"] = replace(base.model, **raw.pop("model"))
            if "calibration" in raw:
                kw["calibration"] = replace(base.calibration, **raw.pop("calibration"))
            if "train" in raw:
                kw["train"] = replace(base.train, **raw.pop("train"))
            for key in ("sample_sizes", "methods"):
                if key in raw:
                    kw[key] = tuple(raw.pop(key))
            kw.update(raw)
            return replace(base, **kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


PROFILES = {
    "desk": ExperimentConfig(),
    "paper": ExperimentConfig(sample_sizes=(200, 1000, 5000, 25000), replicates=50, n_test=1_000_000),
}


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(raw)

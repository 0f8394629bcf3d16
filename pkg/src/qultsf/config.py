"""Experiment configuration: a flat key-value file with sections.

The file format is INI as read by configparser; every value is a scalar.
`load_config(save_config(cfg))` is lossless, floats included. Optional
training fields left empty resolve to per-model defaults at run time.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .models import MODEL_TYPES
from .train import TrainConfig


class ConfigError(ValueError):
    """A config file or override that names a bad field or value."""


@dataclass
class DataConfig:
    path: str = ""
    delimiter: str = ","
    time_column: str = "auto"  # auto | true | false
    max_rows: int = 0          # 0 keeps every row
    train_fraction: float = 0.7
    val_fraction: float = 0.1
    test_fraction: float = 0.2

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_fraction, self.val_fraction, self.test_fraction)


@dataclass
class ModelConfig:
    type: str = "qultsf"
    lookback: int = 336
    horizon: int = 96
    num_qubits: int = 10
    num_layers: int = 3
    kernel: int = 25


@dataclass
class TrainSettings:
    """Raw training knobs; None means "use the model-type default"."""

    batch_size: int = 32
    max_epochs: int | None = None
    learning_rate: float | None = None
    patience: int = 5
    shuffle: bool = True
    seed: int = 0


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainSettings = field(default_factory=TrainSettings)
    output_dir: str = "runs/experiment"


# default learning rate and epoch budget differ between the hybrid model and
# the linear baselines
MODEL_TRAIN_DEFAULTS = {
    "qultsf": {"learning_rate": 1e-3, "max_epochs": 100},
    "linear": {"learning_rate": 5e-3, "max_epochs": 20},
    "nlinear": {"learning_rate": 5e-3, "max_epochs": 20},
    "dlinear": {"learning_rate": 5e-3, "max_epochs": 20},
}


def resolve_train_config(settings: TrainSettings, model_type: str) -> TrainConfig:
    defaults = MODEL_TRAIN_DEFAULTS[model_type]
    return TrainConfig(
        batch_size=settings.batch_size,
        max_epochs=settings.max_epochs if settings.max_epochs is not None
        else defaults["max_epochs"],
        learning_rate=settings.learning_rate if settings.learning_rate is not None
        else defaults["learning_rate"],
        patience=settings.patience,
        shuffle=settings.shuffle,
        seed=settings.seed,
    )


def validate_config(cfg: ExperimentConfig) -> None:
    if not cfg.data.path:
        raise ConfigError("data.path: a dataset file is required")
    if cfg.data.time_column not in ("auto", "true", "false"):
        raise ConfigError(f"data.time_column: expected auto/true/false, got {cfg.data.time_column!r}")
    if cfg.data.max_rows < 0:
        raise ConfigError(f"data.max_rows: must be >= 0, got {cfg.data.max_rows}")
    for name in ("train_fraction", "val_fraction", "test_fraction"):
        if getattr(cfg.data, name) <= 0:
            raise ConfigError(f"data.{name}: must be positive, got {getattr(cfg.data, name)}")
    if cfg.model.type not in MODEL_TYPES:
        raise ConfigError(f"model.type: unknown model {cfg.model.type!r}, "
                          f"expected one of {MODEL_TYPES}")
    for name in ("lookback", "horizon", "num_qubits", "num_layers", "kernel"):
        if getattr(cfg.model, name) < 1:
            raise ConfigError(f"model.{name}: must be >= 1, got {getattr(cfg.model, name)}")
    if cfg.train.batch_size < 1:
        raise ConfigError(f"train.batch_size: must be >= 1, got {cfg.train.batch_size}")
    if cfg.train.max_epochs is not None and cfg.train.max_epochs < 1:
        raise ConfigError(f"train.max_epochs: must be >= 1, got {cfg.train.max_epochs}")
    if cfg.train.learning_rate is not None and cfg.train.learning_rate <= 0:
        raise ConfigError(f"train.learning_rate: must be positive, got {cfg.train.learning_rate}")
    if cfg.train.patience < 0:
        raise ConfigError(f"train.patience: must be >= 0, got {cfg.train.patience}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def save_config(cfg: ExperimentConfig, path) -> None:
    parser = configparser.ConfigParser()
    parser["data"] = {
        "path": cfg.data.path,
        "delimiter": cfg.data.delimiter,
        "time_column": cfg.data.time_column,
        "max_rows": _fmt(cfg.data.max_rows),
        "train_fraction": _fmt(cfg.data.train_fraction),
        "val_fraction": _fmt(cfg.data.val_fraction),
        "test_fraction": _fmt(cfg.data.test_fraction),
    }
    parser["model"] = {
        "type": cfg.model.type,
        "lookback": _fmt(cfg.model.lookback),
        "horizon": _fmt(cfg.model.horizon),
        "num_qubits": _fmt(cfg.model.num_qubits),
        "num_layers": _fmt(cfg.model.num_layers),
        "kernel": _fmt(cfg.model.kernel),
    }
    parser["train"] = {
        "batch_size": _fmt(cfg.train.batch_size),
        "max_epochs": _fmt(cfg.train.max_epochs),
        "learning_rate": _fmt(cfg.train.learning_rate),
        "patience": _fmt(cfg.train.patience),
        "shuffle": _fmt(cfg.train.shuffle),
        "seed": _fmt(cfg.train.seed),
    }
    parser["output"] = {"dir": cfg.output_dir}
    with open(path, "w") as fh:
        parser.write(fh)


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected an integer, got {raw!r}") from None


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a number, got {raw!r}") from None


def _parse_bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{section}.{key}: expected a boolean, got {raw!r}")


_FIELD_PARSERS = {
    ("data", "path"): str,
    ("data", "delimiter"): str,
    ("data", "time_column"): str,
    ("data", "max_rows"): "int",
    ("data", "train_fraction"): "float",
    ("data", "val_fraction"): "float",
    ("data", "test_fraction"): "float",
    ("model", "type"): str,
    ("model", "lookback"): "int",
    ("model", "horizon"): "int",
    ("model", "num_qubits"): "int",
    ("model", "num_layers"): "int",
    ("model", "kernel"): "int",
    ("train", "batch_size"): "int",
    ("train", "max_epochs"): "optional_int",
    ("train", "learning_rate"): "optional_float",
    ("train", "patience"): "int",
    ("train", "shuffle"): "bool",
    ("train", "seed"): "int",
    ("output", "dir"): str,
}


def _convert(section: str, key: str, raw: str):
    kind = _FIELD_PARSERS.get((section, key))
    if kind is None:
        raise ConfigError(f"{section}.{key}: unknown config field")
    if kind is str:
        return raw
    if kind == "int":
        return _parse_int(section, key, raw)
    if kind == "float":
        return _parse_float(section, key, raw)
    if kind == "bool":
        return _parse_bool(section, key, raw)
    if kind == "optional_int":
        return None if raw.strip() == "" else _parse_int(section, key, raw)
    if kind == "optional_float":
        return None if raw.strip() == "" else _parse_float(section, key, raw)
    raise AssertionError(kind)


def _assign(cfg: ExperimentConfig, section: str, key: str, raw: str) -> None:
    value = _convert(section, key, raw)
    if section == "output":
        cfg.output_dir = value
    else:
        setattr(getattr(cfg, section), key, value)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such config file: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = ExperimentConfig()
    for section in parser.sections():
        if section not in ("data", "model", "train", "output"):
            raise ConfigError(f"{section}: unknown config section")
        for key, raw in parser[section].items():
            _assign(cfg, section, key, raw)
    validate_config(cfg)
    return cfg


def apply_overrides(cfg: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply "section.key=value" strings in order, then revalidate."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, raw = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, key = dotted.split(".", 1)
        _assign(cfg, section.strip(), key.strip(), raw.strip())
    validate_config(cfg)
    return cfg

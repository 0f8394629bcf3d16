"""Config file parsing, override handling, and default resolution."""
from __future__ import annotations

import pytest

from qultsf.config import (
    ConfigError,
    DataConfig,
    ExperimentConfig,
    ModelConfig,
    TrainSettings,
    apply_overrides,
    load_config,
    resolve_train_config,
    save_config,
    validate_config,
)


def make_config(**kwargs) -> ExperimentConfig:
    cfg = ExperimentConfig(data=DataConfig(path="data.csv"))
    for dotted, value in kwargs.items():
        section, key = dotted.split("__")
        setattr(getattr(cfg, section), key, value)
    return cfg


def test_round_trip_is_lossless(tmp_path):
    cfg = make_config()
    cfg.data.train_fraction = 0.7
    cfg.data.max_rows = 10_000
    cfg.model.lookback = 336
    cfg.train.learning_rate = 0.0030000000000000001
    cfg.train.max_epochs = 7
    cfg.train.shuffle = False
    cfg.output_dir = "runs/exp a"
    path = tmp_path / "exp.ini"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_round_trip_preserves_none_fields(tmp_path):
    cfg = make_config()
    assert cfg.train.learning_rate is None and cfg.train.max_epochs is None
    path = tmp_path / "exp.ini"
    save_config(cfg, path)
    loaded = load_config(path)
    assert loaded.train.learning_rate is None
    assert loaded.train.max_epochs is None


def test_partial_file_keeps_defaults(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[data]\npath = d.csv\n\n[model]\nlookback = 48\n")
    cfg = load_config(path)
    assert cfg.data.path == "d.csv"
    assert cfg.model.lookback == 48
    assert cfg.model.type == "qultsf"
    assert cfg.model.horizon == 96
    assert cfg.train.batch_size == 32


def test_missing_file_is_an_error(tmp_path):
    with pytest.raises(ConfigError, match="no such config"):
        load_config(tmp_path / "absent.ini")


def test_unknown_section_and_field_are_named(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[data]\npath = d.csv\n\n[extra]\nx = 1\n")
    with pytest.raises(ConfigError, match="extra"):
        load_config(path)
    path.write_text("[data]\npath = d.csv\nnonsense = 1\n")
    with pytest.raises(ConfigError, match="data.nonsense"):
        load_config(path)


def test_bad_values_name_the_field(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[data]\npath = d.csv\n\n[model]\nlookback = soon\n")
    with pytest.raises(ConfigError, match="model.lookback"):
        load_config(path)
    path.write_text("[data]\npath = d.csv\n\n[train]\nshuffle = maybe\n")
    with pytest.raises(ConfigError, match="train.shuffle"):
        load_config(path)


@pytest.mark.parametrize("mutate, field", [
    (lambda c: setattr(c.data, "path", ""), "data.path"),
    (lambda c: setattr(c.data, "time_column", "sometimes"), "data.time_column"),
    (lambda c: setattr(c.data, "max_rows", -1), "data.max_rows"),
    (lambda c: setattr(c.data, "val_fraction", 0.0), "data.val_fraction"),
    (lambda c: setattr(c.model, "type", "transformer"), "model.type"),
    (lambda c: setattr(c.model, "horizon", 0), "model.horizon"),
    (lambda c: setattr(c.model, "num_qubits", 0), "model.num_qubits"),
    (lambda c: setattr(c.train, "batch_size", 0), "train.batch_size"),
    (lambda c: setattr(c.train, "max_epochs", 0), "train.max_epochs"),
    (lambda c: setattr(c.train, "learning_rate", -1.0), "train.learning_rate"),
    (lambda c: setattr(c.train, "patience", -1), "train.patience"),
])
def test_validation_rejects_bad_fields(mutate, field):
    cfg = make_config()
    mutate(cfg)
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        validate_config(cfg)


def test_overrides_apply_in_order():
    cfg = make_config()
    apply_overrides(cfg, ["model.lookback=48", "model.lookback=96",
                          "train.learning_rate=0.01", "output.dir=out"])
    assert cfg.model.lookback == 96
    assert cfg.train.learning_rate == 0.01
    assert cfg.output_dir == "out"


def test_override_can_clear_an_optional_field():
    cfg = make_config()
    cfg.train.max_epochs = 9
    apply_overrides(cfg, ["train.max_epochs="])
    assert cfg.train.max_epochs is None


def test_malformed_overrides_are_rejected():
    cfg = make_config()
    with pytest.raises(ConfigError, match="section.key=value"):
        apply_overrides(cfg, ["lookback=48"])
    with pytest.raises(ConfigError, match="section.key=value"):
        apply_overrides(cfg, ["model.lookback"])
    with pytest.raises(ConfigError, match="unknown config field"):
        apply_overrides(cfg, ["model.depth=4"])


def test_overrides_are_validated():
    cfg = make_config()
    with pytest.raises(ConfigError, match="model.type"):
        apply_overrides(cfg, ["model.type=lstm"])


def test_train_defaults_differ_by_model_type():
    settings = TrainSettings()
    hybrid = resolve_train_config(settings, "qultsf")
    assert hybrid.learning_rate == 1e-3
    assert hybrid.max_epochs == 100
    for baseline in ("linear", "nlinear", "dlinear"):
        tcfg = resolve_train_config(settings, baseline)
        assert tcfg.learning_rate == 5e-3
        assert tcfg.max_epochs == 20


def test_explicit_settings_override_model_defaults():
    settings = TrainSettings(learning_rate=0.05, max_epochs=3, batch_size=8,
                             patience=2, shuffle=False, seed=11)
    tcfg = resolve_train_config(settings, "qultsf")
    assert tcfg.learning_rate == 0.05
    assert tcfg.max_epochs == 3
    assert tcfg.batch_size == 8
    assert tcfg.patience == 2
    assert tcfg.shuffle is False
    assert tcfg.seed == 11

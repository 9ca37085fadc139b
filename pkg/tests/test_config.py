"""Tests for configuration loading and validation."""

from pathlib import Path

import pytest

from src.config import ModelConfig, config_hash, dump_config, flat_keys, load_config
from src.core.errors import ConfigError

ROOT = Path(__file__).resolve().parent.parent


def test_defaults_match_full_model():
    config = ModelConfig()
    assert config.window_size == 8
    assert config.memory_capacity == 7
    assert config.model.input_resolution == 512
    assert config.loss.point == 0.5 and config.loss.score == 1.0
    assert config.train.lr_encoder == 5e-6
    assert config.validate() == []


def test_nested_and_dotted_keys_are_equivalent():
    nested = ModelConfig.from_text("train:\n  lr_other: 0.001\n", use_env=False)
    dotted = ModelConfig.from_text("train.lr_other: 0.001\n", use_env=False)
    assert nested == dotted
    assert nested.train.lr_other == 0.001


def test_exponent_without_dot_is_read_as_number():
    config = ModelConfig.from_text("train:\n  lr_other: 5e-4\n", use_env=False)
    assert config.train.lr_other == pytest.approx(5e-4)


def test_environment_overrides_file(monkeypatch):
    monkeypatch.setenv("HEMO_TRAIN_LR_OTHER", "0.01")
    monkeypatch.setenv("HEMO_EVAL_PCK_THRESHOLDS", "[0.1, 0.2]")
    config = ModelConfig.from_text("train:\n  lr_other: 0.001\n")
    assert config.train.lr_other == 0.01
    assert config.eval.pck_thresholds == (0.1, 0.2)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as exc:
        ModelConfig.from_text("model:\n  widht: 3\n", use_env=False)
    assert "model.widht" in exc.value.fields


def test_parse_error_reports_line():
    with pytest.raises(ConfigError) as exc:
        ModelConfig.from_text("seed: 1\nmodel: [unclosed\n", use_env=False)
    assert exc.value.line is not None


def test_invalid_values_collected_per_field():
    text = "model:\n  window_size: 1\n  input_resolution: 100\ngabor:\n  sigma: 0\n"
    with pytest.raises(ConfigError) as exc:
        ModelConfig.from_text(text, use_env=False)
    assert {"model.window_size", "model.input_resolution", "gabor.sigma"} <= set(exc.value.fields)
    assert len(exc.value.errors) >= 3


def test_memory_capacity_must_match_window():
    with pytest.raises(ConfigError) as exc:
        ModelConfig.from_text("model:\n  window_size: 8\n  memory_capacity: 5\n", use_env=False)
    assert "model.memory_capacity" in exc.value.fields
    ok = ModelConfig.from_text("model:\n  window_size: 8\n  memory_capacity: 7\n", use_env=False)
    assert ok.memory_capacity == 7


def test_wrong_type_rejected():
    with pytest.raises(ConfigError) as exc:
        ModelConfig.from_text("ablation:\n  edge_generator: 3\n", use_env=False)
    assert exc.value.fields == ["ablation.edge_generator"]


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_shipped_configs_load():
    full = load_config(ROOT / "config.yaml")
    assert full == ModelConfig()
    toy = load_config(ROOT / "config.acceptance.yaml")
    assert toy.model.channels == 64
    assert toy.model.input_resolution == 128
    assert toy.train.max_iterations == 200


def test_dump_parses_back_to_equal_config(tiny_config):
    again = ModelConfig.from_text(dump_config(tiny_config), use_env=False)
    assert again == tiny_config
    assert config_hash(again) == config_hash(tiny_config)


def test_hash_changes_with_any_key(tiny_config):
    assert config_hash(tiny_config) != config_hash(tiny_config.replace(seed=1))


def test_architecture_keys_only_cover_network_sections(tiny_config):
    keys = tiny_config.architecture()
    assert all(k.split(".")[0] in ("model", "gabor", "ablation") for k in keys)
    assert set(tiny_config.to_flat()) == set(flat_keys())

import json

import pytest

from core.errors import ConfigError
from models.config import PipelineConfig, ScaleSelectConfig, TrainingConfig
from utils.config import AppConfig


def test_defaults_follow_the_parameter_table():
    config = PipelineConfig()
    assert config.features.h == 15.0
    assert config.graph.sigma_s == 0.20 and config.graph.sigma_l == 0.20
    assert config.graph.knn == 8 and config.graph.beta == 0.9
    assert config.training.mu == 0.01
    assert config.model.kind == "mobgcn"
    assert config.scale_select.m == 5


def test_partial_dict_fills_defaults_and_echo_round_trips():
    config = PipelineConfig.from_dict({"graph": {"knn": 4}, "training": {"epochs": 50}})
    assert config.graph.knn == 4 and config.graph.beta == 0.9
    echo = json.loads(json.dumps(config.to_dict()))
    assert PipelineConfig.from_dict(echo).to_dict() == config.to_dict()


def test_unknown_keys_and_bad_values_are_rejected():
    with pytest.raises(ConfigError, match="unknown config section"):
        PipelineConfig.from_dict({"optimizer": {}})
    with pytest.raises(ConfigError, match="knn_count"):
        PipelineConfig.from_dict({"graph": {"knn_count": 3}})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"model": {"kind": "transformer"}})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"model": {"resolutions": [1, 4]}})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"training": {"fraction": 0.0}})
    with pytest.raises(ConfigError):
        ScaleSelectConfig(cv_mode="median").validate()


def test_overrides_parse_json_values():
    config = PipelineConfig().with_overrides(["model.kind=gcn", "model.resolutions=[8, 4]", "training.epochs=7",
                                              "model.resolutions=\"auto\""])
    assert config.model.kind == "gcn"
    assert config.model.resolutions == "auto"
    assert config.training.epochs == 7
    with pytest.raises(ConfigError):
        PipelineConfig().with_overrides(["model.depth=3"])
    with pytest.raises(ConfigError):
        PipelineConfig().with_overrides(["training"])


def test_hash_identifies_the_configuration():
    a = PipelineConfig()
    b = PipelineConfig()
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 64
    assert a.with_overrides(["training.seed=1"]).config_hash() != a.config_hash()


def test_preset_sets_min_size_and_resolutions():
    config = PipelineConfig.from_dict({"dataset": {"preset": "indian"}}).apply_preset()
    assert config.segmentation.min_size == 10
    assert config.model.resolutions == [16]
    kept = PipelineConfig.from_dict({"dataset": {"preset": "pavia"}, "model": {"resolutions": "auto"}})
    assert kept.apply_preset().model.resolutions == "auto"
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"dataset": {"preset": "houston"}})


def test_repeat_seeds_are_offset():
    training = TrainingConfig(seed=10, fraction=0.1)
    assert training.split_spec(3).seed == 13
    assert training.train_config(3).seed == 13
    assert training.split_spec(0).fraction == 0.1


def test_environment_overrides(monkeypatch, tmp_path):
    for name in ("OUTPUT_DIR", "LOG_LEVEL", "TRAIN_SEED", "TRAIN_REPEATS"):
        monkeypatch.setattr(AppConfig, name, getattr(AppConfig, name))
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("MOBGCN_OUTPUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("MOBGCN_SEED", "42")
    monkeypatch.setenv("MOBGCN_REPEATS", "3")
    monkeypatch.setenv("MOBGCN_LOG_LEVEL", "debug")
    AppConfig.load_environment()
    config = PipelineConfig()
    assert config.output_dir == str(tmp_path / "out")
    assert config.training.seed == 42 and config.training.repeats == 3
    assert AppConfig.LOG_LEVEL == "DEBUG"

"""
Testes de configuração: arquivo YAML da execução, hash de configuração, overrides,
Settings do processo e fluxos de sementes.
"""

import pytest
import yaml
from pydantic import ValidationError

from app.config import Settings, settings
from app.core.errors import ConfigError
from app.schemas.run_config import RunConfig, dump_run_config, load_run_config
from app.utils.seeding import STREAM_POLICY, STREAM_SPAWN, derive_seed, stream_rng

# === CONFIGURAÇÃO DA EXECUÇÃO ===


def test_defaults_match_documented_values():
    config = RunConfig()
    assert config.sim.dt == 0.1
    assert config.sim.max_steps == 300
    assert config.maps.dilation_power == 2
    assert config.observation.history_steps == 10
    assert config.curriculum.t_success == 0.75
    assert config.curriculum.t_fail == 0.25
    assert config.curriculum.p_old == 0.3
    assert config.rewards.epsilon == 0.1
    assert config.observation.student_dim == 4 + 3 + 4 * config.observation.student_neighbors + 2


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("", encoding="utf-8")
    assert load_run_config(path) == RunConfig()


def test_none_path_gives_defaults():
    assert load_run_config(None) == RunConfig()


def test_unknown_keys_are_rejected(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("sim:\n  npc_cont: 3\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_run_config(path)


def test_unknown_top_level_section_is_rejected():
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"telemetry": {}})


def test_missing_file_raises_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "nope.yaml")


def test_malformed_yaml_raises_config_error(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("sim: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_non_mapping_root_raises_config_error(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_dump_then_load_is_identical(tmp_path, tiny_config):
    path = dump_run_config(tiny_config, tmp_path / "run.yaml")
    assert load_run_config(path) == tiny_config
    assert yaml.safe_load(path.read_text(encoding="utf-8"))["seed"] == tiny_config.seed


def test_fail_threshold_must_be_below_success_threshold():
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"curriculum": {"t_fail": 0.8, "t_success": 0.75}})
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"curriculum": {"t_fail": 0.5, "t_success": 0.5}})


@pytest.mark.parametrize(
    "section",
    [
        {"sim": {"dt": 0.0}},
        {"observation": {"history_steps": 2}},
        {"maps": {"arm_length_min": 10.0}},
        {"maps": {"train_t": 0, "train_x": 0}},
        {"evaluation": {"lambdas": [1.5]}},
        {"evaluation": {"traffic": ["teleport"]}},
        {"evaluation": {"students": {"x": "scripted:flying"}}},
        {"baseline": {"target_speed": 20.0}},
        {"baseline": {"headway_gap": 2.0}},
    ],
)
def test_invalid_values_are_rejected(section):
    with pytest.raises(ValidationError):
        RunConfig.model_validate(section)


def test_sections_are_frozen(tiny_config):
    with pytest.raises(ValidationError):
        tiny_config.sim.npc_count = 5


# === HASH ===


def test_hash_is_stable_and_sensitive_to_training_sections(tiny_config):
    same = RunConfig.model_validate(tiny_config.model_dump())
    assert same.config_hash() == tiny_config.config_hash()
    assert tiny_config.with_overrides(seed=8).config_hash() != tiny_config.config_hash()
    assert tiny_config.with_overrides(recalibrate=True).config_hash() != tiny_config.config_hash()


def test_hash_ignores_output_dir_and_evaluation(tiny_config):
    moved = tiny_config.with_overrides(out="runs/elsewhere", episodes=99, lambda_value=-0.5)
    assert moved.output_dir == "runs/elsewhere"
    assert moved.config_hash() == tiny_config.config_hash()


# === OVERRIDES ===


def test_overrides_apply_to_their_sections(tiny_config):
    updated = tiny_config.with_overrides(seed=3, recalibrate=True, episodes=5, lambda_value=0.25)
    assert updated.seed == 3
    assert updated.curriculum.recalibration_enabled
    assert updated.evaluation.episodes == 5
    assert updated.evaluation.lambdas == [0.25]
    assert tiny_config.seed == 7


def test_invalid_override_is_rejected(tiny_config):
    with pytest.raises(ValidationError):
        tiny_config.with_overrides(episodes=0)
    with pytest.raises(ValidationError):
        tiny_config.with_overrides(lambda_value=2.0)


# === SETTINGS DO PROCESSO ===


def test_test_session_never_logs_to_file():
    assert settings.APP_ENV == "testing"
    assert not settings.file_logging_enabled


def test_log_level_is_normalised():
    assert Settings(LOG_LEVEL=" debug ").LOG_LEVEL == "DEBUG"


def test_invalid_log_level_is_rejected():
    with pytest.raises(ValidationError):
        Settings(LOG_LEVEL="LOUD")


def test_invalid_app_env_is_rejected():
    with pytest.raises(ValidationError):
        Settings(APP_ENV="staging")


# === SEMENTES ===


def test_derived_seeds_are_deterministic_and_separated():
    assert derive_seed(7, STREAM_SPAWN, 1, 2) == derive_seed(7, STREAM_SPAWN, 1, 2)
    assert derive_seed(7, STREAM_SPAWN, 1, 2) != derive_seed(7, STREAM_POLICY, 1, 2)
    assert derive_seed(7, STREAM_SPAWN, 1, 2) != derive_seed(7, STREAM_SPAWN, 2, 1)
    assert derive_seed(7, STREAM_SPAWN) != derive_seed(8, STREAM_SPAWN)
    assert 0 <= derive_seed(7, STREAM_SPAWN) < 2**63


def test_stream_rng_reproduces_draws():
    assert stream_rng(1, STREAM_POLICY, 4).random() == stream_rng(1, STREAM_POLICY, 4).random()

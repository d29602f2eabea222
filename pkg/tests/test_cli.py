"""
Testes da linha de comando: códigos de saída e saídas principais de cada subcomando.
"""

import pytest

from app.core.actors import AccelerateStudent, NoTraffic
from app.core.simulator import reset_world
from app.main import EXIT_ERROR, EXIT_OK, build_parser, main
from app.schemas.run_config import RewardParams, SimConfig, dump_run_config
from app.services.evaluation_service import EPISODES_FILE, REPORT_FILE, run_episode
from app.services.plot_data_service import PROFILES_FILE
from app.services.scenario_log_service import ScenarioRecorder


@pytest.fixture
def config_file(tmp_path, tiny_config):
    return dump_run_config(tiny_config.with_overrides(episodes=1), tmp_path / "run.yaml")


def test_eval_writes_report_and_prints_cells(tmp_path, config_file, capsys):
    out = tmp_path / "eval"
    assert main(["eval", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    assert (out / REPORT_FILE).is_file()
    assert (out / EPISODES_FILE).is_file()
    printed = capsys.readouterr().out
    assert "idle@rule: SR=" in printed
    assert "idle@none: SR=" in printed


def test_eval_accepts_scripted_student_flag(tmp_path, config_file, capsys):
    out = tmp_path / "eval"
    code = main(["eval", "--config", str(config_file), "--out", str(out), "--student", "go=scripted:accelerate"])
    assert code == EXIT_OK
    assert "go@none: SR=" in capsys.readouterr().out


def test_eval_with_zero_episodes_is_a_config_error(tmp_path, config_file):
    assert main(["eval", "--config", str(config_file), "--out", str(tmp_path), "--episodes", "0"]) == EXIT_ERROR


def test_missing_config_file_is_an_error(tmp_path):
    assert main(["eval", "--config", str(tmp_path / "absent.yaml")]) == EXIT_ERROR


def test_teacher_traffic_without_checkpoint_is_an_error(tmp_path, tiny_config):
    config = tiny_config.model_validate(
        {**tiny_config.model_dump(mode="json"), "evaluation": {**tiny_config.evaluation.model_dump(), "traffic": ["teacher"]}}
    )
    path = dump_run_config(config, tmp_path / "teacher.yaml")
    assert main(["eval", "--config", str(path), "--out", str(tmp_path / "eval")]) == EXIT_ERROR


def test_malformed_student_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["eval", "--student", "no-separator"])
    assert excinfo.value.code == 2


def test_recalibrate_flag_parses_booleans():
    args = build_parser().parse_args(["train-curriculum", "--recalibrate", "on"])
    assert args.recalibrate is True
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train-curriculum", "--recalibrate", "maybe"])


def test_replay_reports_match(tmp_path, x_map, rng, capsys):
    world = reset_world(x_map, SimConfig(npc_count=0, max_steps=10), rng)
    logs = tmp_path / "logs"
    with ScenarioRecorder(logs / "episode.jsonl", world) as recorder:
        run_episode(world, AccelerateStudent(), NoTraffic(), rng, RewardParams(), recorder)
    assert main(["replay", str(logs)]) == EXIT_OK
    assert ": match (" in capsys.readouterr().out


def test_replay_of_empty_directory_is_an_error(tmp_path):
    assert main(["replay", str(tmp_path)]) == EXIT_ERROR


def test_plot_data_after_eval(tmp_path, config_file, capsys):
    out = tmp_path / "eval"
    main(["eval", "--config", str(config_file), "--out", str(out)])
    capsys.readouterr()
    assert main(["plot-data", "--source", str(out)]) == EXIT_OK
    assert (out / PROFILES_FILE).is_file()
    assert PROFILES_FILE in capsys.readouterr().out


def test_plot_data_without_artifacts_is_an_error(tmp_path):
    assert main(["plot-data", "--source", str(tmp_path)]) == EXIT_ERROR

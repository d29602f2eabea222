"""
Testes da avaliação: matriz estudantes x tráfego, números aleatórios comuns e arquivos
de saída.
"""

import json

import pytest

from app.core.actors import AccelerateStudent, NoTraffic
from app.core.errors import ConfigError
from app.core.lane_graph import map_set_from_config
from app.core.teacher_policy import TeacherPolicy
from app.models.agent import TerminalCause
from app.schemas.report import EpisodeRecord, EvalCell, EvalReport, MeanStd, cell_label
from app.schemas.run_config import RunConfig
from app.services.evaluation_service import (
    EPISODES_FILE,
    REPORT_FILE,
    EvaluationService,
    TrafficCell,
    evaluate,
    resolve_traffic,
)


def _config(base: RunConfig, **evaluation) -> RunConfig:
    data = base.model_dump(mode="json")
    data["evaluation"].update(evaluation)
    return RunConfig.model_validate(data)


def test_idle_student_on_empty_road_always_times_out(tiny_config):
    report, records = EvaluationService(tiny_config).run()
    cell = report.cell("idle", "none")
    assert cell.timeout_rate == 1.0
    assert cell.success_rate == 0.0
    assert cell.velocity.mean == 0.0
    assert all(r.steps == tiny_config.sim.max_steps for r in records if r.traffic == "none")


def test_every_cell_partitions_its_episodes(tiny_config):
    report, records = EvaluationService(tiny_config).run()
    assert len(report.cells) == 2
    assert len(records) == 2 * tiny_config.evaluation.episodes
    for cell in report.cells:
        total = cell.success_rate + cell.collision_rate + cell.offroad_rate + cell.timeout_rate
        assert total == pytest.approx(1.0)
        assert cell.episodes == tiny_config.evaluation.episodes


def test_evaluation_is_deterministic(tiny_config):
    first, first_records = EvaluationService(tiny_config).run()
    second, second_records = EvaluationService(tiny_config).run()
    assert first == second
    assert first_records == second_records


def test_cells_share_scenarios(tiny_config):
    _, records = EvaluationService(tiny_config).run()
    by_cell: dict[str, list[str]] = {}
    for record in records:
        by_cell.setdefault(record.cell, []).append(record.map_id)
    maps = list(by_cell.values())
    assert all(m == maps[0] for m in maps)


def test_evaluation_uses_holdout_maps(tiny_config):
    report, _ = EvaluationService(tiny_config).run()
    holdout = {g.map_id for g in map_set_from_config(tiny_config.seed, tiny_config.maps).holdout}
    assert set(report.maps) == holdout


def test_accelerating_student_on_empty_road_never_collides(tiny_config):
    maps = map_set_from_config(tiny_config.seed, tiny_config.maps).holdout
    cell, records = evaluate(AccelerateStudent(), TrafficCell("none", NoTraffic()), maps, 3, 11, tiny_config)
    assert cell.collision_rate == 0.0
    assert all(r.mean_velocity > 0.0 for r in records)
    assert cell.student == "accelerate"


def test_zero_episodes_is_rejected(tiny_config):
    maps = map_set_from_config(tiny_config.seed, tiny_config.maps).holdout
    with pytest.raises(ValueError):
        evaluate(AccelerateStudent(), TrafficCell("none", NoTraffic()), maps, 0, 0, tiny_config)


def test_report_and_episode_files_are_written(tmp_path, tiny_config):
    report, records = EvaluationService(tiny_config).run(tmp_path)
    saved = EvalReport.model_validate_json((tmp_path / REPORT_FILE).read_text(encoding="utf-8"))
    assert saved == report
    lines = (tmp_path / EPISODES_FILE).read_text(encoding="utf-8").splitlines()
    assert [EpisodeRecord.model_validate_json(line) for line in lines] == records
    assert json.loads(lines[0])["cell"] == cell_label("idle", "rule", None)


def test_scenario_logs_are_written_on_request(tmp_path, tiny_config):
    config = _config(tiny_config, write_scenarios=True, traffic=["none"])
    EvaluationService(config).run(tmp_path)
    logs = sorted((tmp_path / "scenarios").glob("*.jsonl"))
    assert len(logs) == config.evaluation.episodes


# === TRÁFEGO DO PROFESSOR ===


def test_teacher_traffic_without_checkpoint_is_a_config_error(tiny_config):
    with pytest.raises(ConfigError):
        resolve_traffic(_config(tiny_config, traffic=["teacher"]))


def test_teacher_traffic_gets_one_cell_per_lambda(tiny_config):
    config = _config(tiny_config, traffic=["teacher"], lambdas=[1.0, -1.0])
    teacher = TeacherPolicy(config.network, seed=0)
    report, _ = EvaluationService(config, teacher=teacher).run()
    assert [cell.lam for cell in report.cells] == [1.0, -1.0]
    assert report.cell("idle", "teacher", -1.0).label == "idle@teacher(-1.00)"


# === SCHEMAS ===


def test_cell_rates_must_sum_to_one():
    stat = MeanStd(mean=0.0, std=0.0)
    with pytest.raises(ValueError):
        EvalCell(
            student="s",
            traffic="none",
            episodes=2,
            success_rate=0.5,
            collision_rate=0.0,
            offroad_rate=0.0,
            timeout_rate=0.0,
            route_progress=stat,
            velocity=stat,
            reward=stat,
            npc_velocity=stat,
        )


def test_unfinished_episode_counts_as_timeout():
    record = EpisodeRecord(
        cell="s@none",
        student="s",
        traffic="none",
        episode=0,
        map_id="m",
        cause=TerminalCause.NONE,
        steps=3,
        route_progress=0.1,
        mean_velocity=1.0,
        cumulative_reward=0.0,
    )
    assert EvalCell.from_records([record]).timeout_rate == 1.0


def test_mean_std_is_population_statistic():
    stat = MeanStd.of([1.0, 3.0])
    assert (stat.mean, stat.std) == (2.0, 1.0)
    assert MeanStd.of([]) == MeanStd(mean=0.0, std=0.0)

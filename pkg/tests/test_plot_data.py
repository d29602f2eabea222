"""
Testes da exportação de dados para gráficos.
"""

import csv

import pytest

from app.core.errors import DataError
from app.models.agent import TerminalCause
from app.schemas.report import EpisodeRecord
from app.services.evaluation_service import EPISODES_FILE
from app.services.plot_data_service import (
    CURRICULUM_LOG_FILE,
    CURRICULUM_TRACE_FILE,
    MEAN_PROFILES_FILE,
    PROFILES_FILE,
    curriculum_trace,
    export_plot_data,
    mean_profiles,
    read_episodes,
    velocity_profiles,
)


def _record(cell: str, episode: int, speeds: list[float]) -> EpisodeRecord:
    return EpisodeRecord(
        cell=cell,
        student=cell.split("@")[0],
        traffic=cell.split("@")[1],
        episode=episode,
        map_id="m",
        cause=TerminalCause.TIMEOUT,
        steps=len(speeds),
        route_progress=0.5,
        mean_velocity=sum(speeds) / len(speeds),
        cumulative_reward=0.0,
        speeds=speeds,
    )


@pytest.fixture
def records() -> list[EpisodeRecord]:
    return [_record("a@rule", 0, [1.0, 2.0, 3.0]), _record("a@rule", 1, [3.0]), _record("b@none", 0, [0.5, 0.5])]


def _write_episodes(directory, records) -> None:
    (directory / EPISODES_FILE).write_text("\n".join(r.model_dump_json() for r in records) + "\n", encoding="utf-8")


def _read_csv(path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def test_velocity_profile_has_one_row_per_step(records):
    rows = velocity_profiles(records)
    assert len(rows) == 6
    assert rows[0] == ("a@rule", 0, 1, 1.0)
    assert rows[2] == ("a@rule", 0, 3, 3.0)


def test_mean_profile_averages_active_episodes(records):
    rows = {(cell, t): (mean, active) for cell, t, mean, active in mean_profiles(records)}
    assert rows[("a@rule", 1)] == (2.0, 2)
    assert rows[("a@rule", 3)] == (3.0, 1)
    assert rows[("b@none", 2)] == (0.5, 1)


def test_empty_records_are_rejected():
    with pytest.raises(DataError):
        velocity_profiles([])
    with pytest.raises(DataError):
        mean_profiles([])


def test_read_episodes_errors(tmp_path):
    with pytest.raises(DataError):
        read_episodes(tmp_path / EPISODES_FILE)
    (tmp_path / EPISODES_FILE).write_text("\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_episodes(tmp_path / EPISODES_FILE)
    (tmp_path / EPISODES_FILE).write_text('{"cell": 1}\n', encoding="utf-8")
    with pytest.raises(DataError):
        read_episodes(tmp_path / EPISODES_FILE)


def test_export_from_evaluation_dir(tmp_path, records):
    _write_episodes(tmp_path, records)
    out = tmp_path / "plots"
    written = export_plot_data(tmp_path, out)
    assert [p.name for p in written] == [PROFILES_FILE, MEAN_PROFILES_FILE]
    rows = _read_csv(out / PROFILES_FILE)
    assert len(rows) == 6
    assert rows[0] == {"cell": "a@rule", "episode": "0", "t": "1", "speed": "1.0"}


def test_export_curriculum_trace(tmp_path):
    header = "round,phase,iteration,lambda,level_index,replay,episodes,success_rate,mean_return\n"
    body = "0,student,0,1.0,0,false,3,0.8,1.5\n0,student,1,0.75,1,false,2,,\n"
    (tmp_path / CURRICULUM_LOG_FILE).write_text(header + body, encoding="utf-8")
    written = export_plot_data(tmp_path)
    assert [p.name for p in written] == [CURRICULUM_TRACE_FILE]
    trace = _read_csv(tmp_path / CURRICULUM_TRACE_FILE)
    assert [row["step"] for row in trace] == ["1", "2"]
    assert [row["lambda"] for row in trace] == ["1.0", "0.75"]
    assert trace[1]["success_rate"] == ""


def test_empty_curriculum_log_is_rejected(tmp_path):
    (tmp_path / CURRICULUM_LOG_FILE).write_text("round,phase\n", encoding="utf-8")
    with pytest.raises(DataError):
        curriculum_trace(tmp_path / CURRICULUM_LOG_FILE)


def test_directory_without_artifacts_is_rejected(tmp_path):
    with pytest.raises(DataError):
        export_plot_data(tmp_path)

"""
Testes dos logs de cenário: gravação, replay bit a bit e detecção de adulteração.
"""

import json

import pytest

from app.core.actors import AccelerateStudent, RuleTraffic
from app.core.errors import ReplayError
from app.core.simulator import reset_world
from app.schemas.run_config import RewardParams, RuleParams, SimConfig
from app.services.evaluation_service import run_episode
from app.services.scenario_log_service import ScenarioRecorder, read_scenario, replay_scenario, world_from_header
from app.utils.seeding import STREAM_POLICY, stream_rng


@pytest.fixture
def recorded(tmp_path, x_map, rng):
    """Episódio curto com tráfego de regras gravado em disco"""
    world = reset_world(x_map, SimConfig(npc_count=2, max_steps=30), rng, seed=5)
    path = tmp_path / "scenario.jsonl"
    with ScenarioRecorder(path, world, label="accelerate@rule") as recorder:
        run_episode(world, AccelerateStudent(), RuleTraffic(RuleParams()), stream_rng(5, STREAM_POLICY), RewardParams(), recorder)
    return path, world


def _rewrite(path, index: int, edit) -> None:
    lines = path.read_text(encoding="utf-8").splitlines()
    data = json.loads(lines[index])
    edit(data)
    lines[index] = json.dumps(data)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_recorded_episode_replays_exactly(recorded):
    path, world = recorded
    result = replay_scenario(path)
    assert result.verdict == "match"
    assert result.steps == world.step_count
    assert result.first_mismatch is None


def test_header_rebuilds_initial_world(recorded):
    path, world = recorded
    header, steps = read_scenario(path)
    rebuilt = world_from_header(header)
    assert header.label == "accelerate@rule"
    assert len(rebuilt.states) == len(world.states)
    assert rebuilt.step_count == 0
    assert len(steps) == world.step_count
    assert steps[-1].done


def test_tampered_state_is_reported_at_its_step(recorded):
    path, _ = recorded

    def nudge(data):
        data["agents"][0]["x"] += 0.5

    _rewrite(path, 2, nudge)
    result = replay_scenario(path)
    assert result.verdict == "mismatch"
    assert result.first_mismatch == 2
    assert result.steps == 1


def test_tampered_initial_state_diverges_on_first_step(recorded):
    path, _ = recorded

    def nudge(data):
        data["initial"][1]["y"] += 1.0

    _rewrite(path, 0, nudge)
    result = replay_scenario(path)
    assert not result.match
    assert result.first_mismatch == 1


def test_missing_action_for_live_agent_is_an_error(recorded):
    path, _ = recorded

    def drop(data):
        data["agents"][0]["action"] = None

    _rewrite(path, 1, drop)
    with pytest.raises(ReplayError):
        replay_scenario(path)


def test_header_only_log_trivially_matches(recorded):
    path, _ = recorded
    header = path.read_text(encoding="utf-8").splitlines()[0]
    path.write_text(header + "\n", encoding="utf-8")
    result = replay_scenario(path)
    assert result.match
    assert result.steps == 0


def test_missing_file_is_a_replay_error(tmp_path):
    with pytest.raises(ReplayError):
        replay_scenario(tmp_path / "absent.jsonl")


def test_empty_file_is_a_replay_error(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("\n", encoding="utf-8")
    with pytest.raises(ReplayError):
        replay_scenario(path)


def test_invalid_line_is_a_replay_error(recorded):
    path, _ = recorded
    with path.open("a", encoding="utf-8") as f:
        f.write('{"t": "soon"}\n')
    with pytest.raises(ReplayError):
        read_scenario(path)


def test_closed_recorder_refuses_writes(tmp_path, x_map, rng):
    world = reset_world(x_map, SimConfig(npc_count=1, max_steps=5), rng)
    recorder = ScenarioRecorder(tmp_path / "closed.jsonl", world)
    recorder.close()
    with pytest.raises(ReplayError):
        recorder.record(world)

"""
Logs de cenário (JSONL) e verificação de replay.

O replay reconstrói o mundo a partir do cabeçalho, reaplica as ações gravadas e exige
igualdade exata de todos os estados em todos os passos.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

from pydantic import ValidationError

from app.core.errors import EpisodeError, ReplayError
from app.core.simulator import STUDENT_ID, World, place_world, step_episode
from app.models.agent import Action
from app.schemas.lane_map import LaneGraphDocument
from app.schemas.scenario import AgentStateRecord, RouteRecord, ScenarioHeader, ScenarioStep
from app.utils.logger import get_logger

logger = get_logger(__name__)


def _snapshot(world: World, with_actions: bool) -> list[AgentStateRecord]:
    records = []
    for agent_id, state in enumerate(world.states):
        action = world.last_actions.get(agent_id) if with_actions else None
        records.append(AgentStateRecord.from_state(agent_id, state, action.index if action is not None else None))
    return records


class ScenarioRecorder:
    """Grava um episódio passo a passo; use como context manager"""

    def __init__(self, path: str | Path, world: World, label: str = ""):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file: TextIO | None = open(self.path, "w", encoding="utf-8")  # noqa: SIM115
        header = ScenarioHeader(
            label=label,
            seed=world.seed,
            has_student=world.has_student,
            history_steps=world.history_steps,
            sim=world.sim,
            lane_map=LaneGraphDocument.from_graph(world.graph),
            routes=[RouteRecord.from_route(route) for route in world.routes],
            initial=_snapshot(world, with_actions=False),
        )
        self._write(header.model_dump_json())
        self.steps = 0

    def _write(self, line: str) -> None:
        if self._file is None:
            raise ReplayError(f"Log de cenário já fechado: {self.path}")
        self._file.write(line + "\n")

    def record(self, world: World) -> None:
        """Grava o estado após um passo, com a ação que o produziu"""
        self.steps += 1
        step = ScenarioStep(t=world.step_count, agents=_snapshot(world, with_actions=True), done=world.done)
        self._write(step.model_dump_json())

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __enter__(self) -> "ScenarioRecorder":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_scenario(path: str | Path) -> tuple[ScenarioHeader, list[ScenarioStep]]:
    """
    Lê um log de cenário.

    Raises:
        ReplayError: Arquivo ausente, vazio ou com linhas inválidas
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ReplayError(f"Log de cenário não encontrado: {file_path}")
    lines = [line for line in file_path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise ReplayError(f"Log de cenário vazio: {file_path}")
    try:
        header = ScenarioHeader.model_validate_json(lines[0])
        steps = [ScenarioStep.model_validate_json(line) for line in lines[1:]]
    except ValidationError as e:
        raise ReplayError(f"Log de cenário inválido em {file_path}: {e}") from e
    return header, steps


def world_from_header(header: ScenarioHeader) -> World:
    """Reconstrói o mundo no instante 0"""
    return place_world(
        header.lane_map.to_graph(),
        header.sim,
        [record.to_state() for record in header.initial],
        [record.to_route() for record in header.routes],
        has_student=header.has_student,
        history_steps=header.history_steps,
        seed=header.seed,
    )


@dataclass
class ReplayResult:
    match: bool
    steps: int
    first_mismatch: int | None = None
    detail: str = ""

    @property
    def verdict(self) -> str:
        return "match" if self.match else "mismatch"


def replay_scenario(path: str | Path) -> ReplayResult:
    """
    Re-simula o log e compara bit a bit cada estado gravado.

    Raises:
        ReplayError: Log ilegível ou ações ausentes para agentes vivos
    """
    header, steps = read_scenario(path)
    world = world_from_header(header)
    initial = _snapshot(world, with_actions=False)
    if initial != header.initial:
        return ReplayResult(match=False, steps=0, first_mismatch=0, detail="initial states differ")

    for step in steps:
        alive = {i for i, s in enumerate(world.states) if s.alive}
        actions = {a.id: Action.from_index(a.action) for a in step.agents if a.action is not None}
        if set(actions) != alive:
            raise ReplayError(f"Passo {step.t}: ações gravadas não cobrem os agentes vivos")
        student_action = actions.pop(STUDENT_ID, None) if world.has_student else None
        try:
            step_episode(world, actions, student_action)
        except EpisodeError as e:
            return ReplayResult(match=False, steps=step.t - 1, first_mismatch=step.t, detail=str(e))
        replayed = _snapshot(world, with_actions=True)
        if world.step_count != step.t or replayed != step.agents or world.done != step.done:
            logger.warning(f"Replay diverged at step {step.t} of {path}")
            return ReplayResult(match=False, steps=step.t - 1, first_mismatch=step.t, detail="state differs")
    return ReplayResult(match=True, steps=len(steps))

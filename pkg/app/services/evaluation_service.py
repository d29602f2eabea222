"""
Serviço de avaliação: matriz estudantes x fontes de tráfego sobre os mapas de hold-out.

Todas as células usam números aleatórios comuns: o episódio e de qualquer célula parte
do mesmo mapa, dos mesmos spawns e das mesmas rotas.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from app.core.actors import (
    NoTraffic,
    PolicyStudent,
    RuleTraffic,
    StudentActor,
    TeacherTraffic,
    TrafficSource,
    scripted_student,
)
from app.core.errors import ConfigError
from app.core.lane_graph import map_set_from_config
from app.core.ppo import ScenarioSampler
from app.core.rewards import driving_reward
from app.core.simulator import STUDENT_ID, World, episode_outcome, step_episode
from app.core.teacher_policy import TeacherPolicy
from app.models.agent import EpisodeOutcome
from app.models.lane import LaneGraph
from app.schemas.report import EpisodeRecord, EvalCell, EvalReport, cell_label
from app.schemas.run_config import RewardParams, RunConfig
from app.services.checkpoint_service import load_student, load_teacher
from app.services.scenario_log_service import ScenarioRecorder
from app.utils.logger import get_logger
from app.utils.seeding import STREAM_POLICY, stream_rng

logger = get_logger(__name__)

EPISODES_FILE = "episodes.jsonl"
REPORT_FILE = "report.json"


def run_episode(
    world: World,
    student: StudentActor,
    traffic: TrafficSource,
    rng,
    rewards: RewardParams,
    recorder: ScenarioRecorder | None = None,
) -> EpisodeOutcome:
    """Executa um episódio até o fim; ℛ acumula a recompensa de condução do estudante"""
    cumulative = 0.0
    while not world.done:
        npc_actions = traffic.act(world, rng)
        student_action = student.act(world, rng)
        result = step_episode(world, npc_actions, student_action)
        transition = result.transitions.get(STUDENT_ID)
        if transition is not None:
            cumulative += driving_reward(transition, rewards)
        if recorder is not None:
            recorder.record(world)
    return episode_outcome(world, cumulative)


@dataclass
class TrafficCell:
    """Uma coluna da matriz: fonte de tráfego e o λ correspondente"""

    name: str
    source: TrafficSource
    lam: float | None = None


def evaluate(
    student: StudentActor,
    traffic: TrafficCell,
    maps: Sequence[LaneGraph],
    episodes: int,
    seed: int,
    config: RunConfig,
    student_label: str | None = None,
    scenario_dir: Path | None = None,
) -> tuple[EvalCell, list[EpisodeRecord]]:
    """
    Avalia um estudante contra uma fonte de tráfego.

    Returns:
        (célula agregada, registros por episódio)
    """
    if episodes < 1:
        raise ValueError(f"episodes deve ser >= 1 (recebido {episodes})")
    label = student_label or student.name
    cell = cell_label(label, traffic.name, traffic.lam)
    sampler = ScenarioSampler(maps, config, seed, spawn_npcs=traffic.source.spawns_npcs)
    records = []
    for episode in range(episodes):
        world = sampler.world(episode)
        rng = stream_rng(seed, STREAM_POLICY, episode)
        recorder = None
        if scenario_dir is not None:
            recorder = ScenarioRecorder(scenario_dir / f"{cell}_{episode:04d}.jsonl", world, label=cell)
        try:
            outcome = run_episode(world, student, traffic.source, rng, config.rewards, recorder)
        finally:
            if recorder is not None:
                recorder.close()
        records.append(
            EpisodeRecord(
                cell=cell,
                student=label,
                traffic=traffic.name,
                lam=traffic.lam,
                episode=episode,
                map_id=world.graph.map_id,
                cause=outcome.student_cause,
                steps=outcome.steps,
                route_progress=outcome.route_progress,
                mean_velocity=outcome.mean_velocity,
                cumulative_reward=outcome.cumulative_reward,
                npc_mean_velocity=outcome.npc_mean_velocity,
                speeds=outcome.speed_profile,
            )
        )
        logger.debug(f"{cell} episode {episode}: {outcome.student_cause} after {outcome.steps} steps")
    result = EvalCell.from_records(records)
    logger.info(
        f"{cell}: SR={result.success_rate:.2f} CR={result.collision_rate:.2f} "
        f"OR={result.offroad_rate:.2f} TR={result.timeout_rate:.2f} RP={result.route_progress.mean:.2f}"
    )
    return result, records


def resolve_students(config: RunConfig) -> dict[str, StudentActor]:
    """
    Estudantes da matriz a partir de `evaluation.students`.
    Origens `scripted:<nome>` são controladores fixos; as demais são checkpoints (política gulosa).
    """
    students: dict[str, StudentActor] = {}
    for label, source in config.evaluation.students.items():
        if source.startswith("scripted:"):
            students[label] = scripted_student(source.removeprefix("scripted:"), config.baseline)
        else:
            policy = load_student(source, config)
            students[label] = PolicyStudent(policy, config.observation.student_neighbors, greedy=True, name=label)
    return students


def resolve_traffic(config: RunConfig, teacher: TeacherPolicy | None = None) -> list[TrafficCell]:
    """
    Colunas da matriz: uma por fonte, e uma por λ para o professor.

    Raises:
        ConfigError: Tráfego do professor sem checkpoint
        CheckpointError: Checkpoint do professor ausente ou incompatível
    """
    cells = []
    for kind in config.evaluation.traffic:
        if kind == "rule":
            cells.append(TrafficCell(name="rule", source=RuleTraffic(config.baseline)))
        elif kind == "none":
            cells.append(TrafficCell(name="none", source=NoTraffic()))
        else:
            if teacher is None:
                if not config.evaluation.teacher_checkpoint:
                    raise ConfigError("Tráfego 'teacher' exige evaluation.teacher_checkpoint")
                teacher = load_teacher(config.evaluation.teacher_checkpoint, config)
            for lam in config.evaluation.lambdas:
                cells.append(TrafficCell(name="teacher", source=TeacherTraffic(teacher, lam), lam=lam))
    return cells


class EvaluationService:
    """Executa a matriz de avaliação e grava report.json e episodes.jsonl"""

    def __init__(self, config: RunConfig, teacher: TeacherPolicy | None = None):
        self.config = config
        self.teacher = teacher
        maps = map_set_from_config(config.seed, config.maps)
        self.maps = maps.holdout if config.evaluation.use_holdout else maps.train

    def run(self, out_dir: str | Path | None = None) -> tuple[EvalReport, list[EpisodeRecord]]:
        evaluation = self.config.evaluation
        students = resolve_students(self.config)
        traffic_cells = resolve_traffic(self.config, self.teacher)
        scenario_dir = Path(out_dir) / "scenarios" if out_dir is not None and evaluation.write_scenarios else None

        cells, records = [], []
        for label, student in students.items():
            for traffic in traffic_cells:
                cell, cell_records = evaluate(
                    student,
                    traffic,
                    self.maps,
                    evaluation.episodes,
                    self.config.seed,
                    self.config,
                    student_label=label,
                    scenario_dir=scenario_dir,
                )
                cells.append(cell)
                records.extend(cell_records)

        report = EvalReport(
            seed=self.config.seed,
            episodes_per_cell=evaluation.episodes,
            maps=[graph.map_id for graph in self.maps],
            config_hash=self.config.config_hash(),
            cells=cells,
        )
        if out_dir is not None:
            write_report(report, records, out_dir)
        return report, records


def write_report(report: EvalReport, records: list[EpisodeRecord], out_dir: str | Path) -> None:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / REPORT_FILE).write_text(report.model_dump_json(indent=2), encoding="utf-8")
    with open(path / EPISODES_FILE, "w", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json() + "\n")
    logger.info(f"Evaluation written to {path} ({len(report.cells)} cells, {len(records)} episodes)")

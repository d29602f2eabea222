"""
Orquestração do treino: currículo automático (professor -> recalibração -> estudante,
repetido por rodadas) e o estudante de referência treinado contra o tráfego de regras.

Sementes de cada iteração derivam de (semente raiz, fluxo, rodada, fase, iteração);
com o estado do gerador de replay de λ salvo no checkpoint, uma execução retomada
produz os mesmos CSVs que uma execução contínua.
"""

import csv
import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from app.constants import CURRICULUM_COLUMNS, METRICS_COLUMNS
from app.core.actors import PolicyStudent, RuleTraffic, TeacherTraffic
from app.core.curriculum import (
    CurriculumState,
    Phase,
    advance,
    recalibrate,
    student_lambda_for_iteration,
    success_rate,
    teacher_lambda,
)
from app.core.errors import TrainingError
from app.core.lane_graph import map_set_from_config
from app.core.optim import Adam
from app.core.ppo import (
    Rollout,
    RolloutBuffer,
    ScenarioSampler,
    UpdateStats,
    collect_student_rollouts,
    collect_teacher_rollouts,
    policy_seed,
    ppo_update,
    shuffle_seed,
)
from app.core.student_policy import StudentPolicy
from app.core.teacher_policy import TeacherPolicy
from app.schemas.checkpoint import CheckpointMeta, CurriculumStateDocument
from app.schemas.run_config import PpoConfig, RunConfig, dump_run_config
from app.services.checkpoint_service import has_checkpoint, load_checkpoint, save_checkpoint
from app.services.evaluation_service import run_episode
from app.utils.logger import get_logger
from app.utils.seeding import STREAM_INIT, STREAM_LAMBDA, STREAM_POLICY, STREAM_REPLAY, derive_seed, stream_rng

logger = get_logger(__name__)

METRICS_FILE = "metrics.csv"
CURRICULUM_LOG_FILE = "curriculum_log.csv"
CHECKPOINT_DIR = "checkpoint"
CONFIG_FILE = "config.yaml"

# Índice de fase usado na derivação de sementes
_PHASE_CODE = {Phase.TEACHER: 0, Phase.RECALIBRATE: 1, Phase.STUDENT: 2}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class CsvLog:
    """CSV com colunas fixas, acrescentado linha a linha; pode ser truncado para retomada"""

    def __init__(self, path: Path, columns: tuple[str, ...]):
        self.path = path
        self.columns = columns
        self.rows = 0
        if not self.path.is_file():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8", newline="") as f:
                csv.writer(f, lineterminator="\n").writerow(columns)

    def append(self, **values) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise ValueError(f"Colunas desconhecidas em {self.path.name}: {sorted(unknown)}")
        with open(self.path, "a", encoding="utf-8", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow([_format(values.get(c)) for c in self.columns])
        self.rows += 1

    def truncate(self, rows: int) -> None:
        """Mantém o cabeçalho e as primeiras `rows` linhas"""
        with open(self.path, encoding="utf-8", newline="") as f:
            lines = f.read().splitlines()
        kept = lines[: rows + 1]
        with open(self.path, "w", encoding="utf-8", newline="") as f:
            f.write("\n".join(kept) + "\n")
        self.rows = len(kept) - 1


def _mean_stream_return(buffer: RolloutBuffer) -> float | None:
    if not buffer.streams:
        return None
    totals = [sum(buffer.rewards[i] for i in indices) for indices in buffer.streams.values()]
    return float(np.mean(totals))


def _mean_student_return(rollout: Rollout) -> float | None:
    if not rollout.episodes:
        return None
    return float(np.mean([episode.student_return for episode in rollout.episodes]))


class _Trainer:
    """Componentes e registros comuns aos dois modos de treino"""

    kind = ""

    def __init__(self, config: RunConfig, out_dir: str | Path, resume: bool = True):
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.seed = config.seed
        self.maps = map_set_from_config(config.seed, config.maps)
        self.student = StudentPolicy(
            config.observation.student_dim,
            config.network.student_hidden,
            seed=derive_seed(self.seed, STREAM_INIT, 1),
        )
        self.student_opt = Adam(self.student.store, config.student_ppo.learning_rate)
        self.metrics = CsvLog(self.out_dir / METRICS_FILE, METRICS_COLUMNS)
        self.checkpoint_dir = self.out_dir / CHECKPOINT_DIR
        self.resumed = resume and has_checkpoint(self.checkpoint_dir)
        if not self.resumed:
            self.metrics.truncate(0)
        dump_run_config(config, self.out_dir / CONFIG_FILE)

    def _update(self, policy, optimizer: Adam, buffer: RolloutBuffer, ppo: PpoConfig, seed: int) -> UpdateStats | None:
        """Atualização PPO; uma falha numérica descarta a iteração sem interromper o treino"""
        try:
            return ppo_update(policy, optimizer, buffer, ppo, seed)
        except TrainingError as e:
            logger.error(f"PPO update skipped: {e}")
            return None

    def _log_metrics(
        self,
        round_index: int,
        phase: Phase,
        iteration: int,
        lam: float | None,
        episodes: int,
        sr: float | None,
        mean_return: float | None,
        stats: UpdateStats | None,
    ) -> None:
        self.metrics.append(
            iteration=iteration,
            round=round_index,
            phase=phase.value,
            **{"lambda": lam},
            episodes=episodes,
            success_rate=sr,
            mean_return=mean_return,
            policy_loss=stats.policy_loss if stats else None,
            value_loss=stats.value_loss if stats else None,
            entropy=stats.entropy if stats else None,
            clip_fraction=stats.clip_fraction if stats else None,
        )
        sr_text = f"{sr:.3f}" if sr is not None else "n/a"
        loss_text = f"{stats.policy_loss:+.4f}/{stats.value_loss:.4f}" if stats else "skipped"
        lam_text = f"{lam:+.2f}" if lam is not None else "mixed"
        logger.info(
            f"[round {round_index}] {phase.value} it {iteration}: λ={lam_text} "
            f"episodes={episodes} SR={sr_text} loss={loss_text}"
        )


class CurriculumTrainer(_Trainer):
    """Laço do currículo automático com checkpoint ao fim de cada fase"""

    kind = "curriculum"

    def __init__(self, config: RunConfig, out_dir: str | Path, resume: bool = True):
        super().__init__(config, out_dir, resume)
        self.teacher = TeacherPolicy(config.network, seed=derive_seed(self.seed, STREAM_INIT, 0))
        self.teacher_opt = Adam(self.teacher.store, config.teacher_ppo.learning_rate)
        self.state = CurriculumState()
        self.replay_rng = stream_rng(self.seed, STREAM_REPLAY)
        self.curriculum_log = CsvLog(self.out_dir / CURRICULUM_LOG_FILE, CURRICULUM_COLUMNS)
        self.next_round = 0
        self.next_phase = Phase.TEACHER
        if self.resumed:
            self._restore()
        else:
            self.curriculum_log.truncate(0)

    # === CHECKPOINT ===

    def _save(self) -> None:
        arrays = {**self.teacher.to_arrays(), **self.student.to_arrays()}
        arrays.update(self.teacher_opt.to_arrays("teacher_opt"))
        arrays.update(self.student_opt.to_arrays("student_opt"))
        meta = CheckpointMeta(
            kind=self.kind,
            config_hash=self.config.config_hash(),
            components=["teacher", "student"],
            next_round=self.next_round,
            next_phase=self.next_phase,
            curriculum=CurriculumStateDocument.from_state(self.state),
            replay_rng_state=json.dumps(self.replay_rng.bit_generator.state),
            metrics_rows=self.metrics.rows,
            curriculum_rows=self.curriculum_log.rows,
        )
        save_checkpoint(self.checkpoint_dir, arrays, meta)

    def _restore(self) -> None:
        arrays, meta = load_checkpoint(self.checkpoint_dir, expected_hash=self.config.config_hash())
        self.teacher.load_arrays(arrays)
        self.student.load_arrays(arrays)
        self.teacher_opt.load_arrays(arrays, "teacher_opt")
        self.student_opt.load_arrays(arrays, "student_opt")
        if meta.curriculum is not None:
            self.state = meta.curriculum.to_state()
        if meta.replay_rng_state is not None:
            self.replay_rng.bit_generator.state = json.loads(meta.replay_rng_state)
        self.next_round = meta.next_round
        self.next_phase = meta.next_phase
        self.metrics.truncate(meta.metrics_rows)
        self.curriculum_log.truncate(meta.curriculum_rows)
        logger.info(f"Resumed curriculum at round {self.next_round}, phase {self.next_phase}")

    def _iteration_seed_indices(self, round_index: int, phase: Phase, iteration: int) -> tuple[int, int, int]:
        return round_index, _PHASE_CODE[phase], iteration

    def _log_curriculum(
        self,
        round_index: int,
        phase: Phase,
        iteration: int,
        lam: float,
        level_index: int,
        replay: bool,
        episodes: int,
        sr: float | None,
        mean_return: float | None,
    ) -> None:
        self.curriculum_log.append(
            round=round_index,
            phase=phase.value,
            iteration=iteration,
            **{"lambda": lam},
            level_index=level_index,
            replay=replay,
            episodes=episodes,
            success_rate=sr,
            mean_return=mean_return,
        )

    # === FASES ===

    def run_teacher_phase(self, round_index: int) -> None:
        """N_teacher iterações de IPPO; λ uniforme por episódio; estudante só em inferência"""
        phases = self.config.curriculum
        ppo = self.config.teacher_ppo
        student_actor = PolicyStudent(self.student, self.config.observation.student_neighbors)
        self.state = self.state.with_phase(Phase.TEACHER)
        for iteration in range(phases.n_teacher):
            indices = self._iteration_seed_indices(round_index, Phase.TEACHER, iteration)
            sampler = ScenarioSampler(self.maps.train, self.config, self.seed, indices=indices)
            lam_rng = stream_rng(self.seed, STREAM_LAMBDA, *indices)
            lambda_set = self.state.lambda_set

            def draw_lambda(episode: int, rng=lam_rng, levels=lambda_set) -> float:
                return teacher_lambda(levels, rng)

            rollout = collect_teacher_rollouts(
                self.teacher,
                student_actor,
                sampler,
                ppo.steps_per_iteration,
                draw_lambda,
                policy_seed(self.seed, *indices),
            )
            mean_return = _mean_stream_return(rollout.buffer)
            stats = self._update(self.teacher, self.teacher_opt, rollout.buffer, ppo, shuffle_seed(self.seed, *indices))
            sr = success_rate([episode.cause for episode in rollout.episodes])
            self._log_metrics(
                round_index, Phase.TEACHER, iteration, None, len(rollout.episodes), sr, mean_return, stats
            )

    def run_recalibration(self, round_index: int) -> None:
        """Avalia o estudante em todos os níveis com o professor atualizado e escolhe o λ inicial"""
        phases = self.config.curriculum
        student_actor = PolicyStudent(self.student, self.config.observation.student_neighbors)

        def evaluate_level(index: int, lam: float, episodes: int) -> float:
            indices = self._iteration_seed_indices(round_index, Phase.RECALIBRATE, index)
            sampler = ScenarioSampler(self.maps.train, self.config, self.seed, indices=indices)
            traffic = TeacherTraffic(self.teacher, lam)
            causes, returns = [], []
            for episode in range(episodes):
                world = sampler.world(episode)
                rng = stream_rng(self.seed, STREAM_POLICY, *indices, episode)
                outcome = run_episode(world, student_actor, traffic, rng, self.config.rewards)
                causes.append(outcome.student_cause)
                returns.append(outcome.cumulative_reward)
            rate = success_rate(causes) or 0.0
            self._log_curriculum(
                round_index, Phase.RECALIBRATE, index, lam, index, False, episodes, rate, float(np.mean(returns))
            )
            return rate

        self.state, _ = recalibrate(self.state, evaluate_level, phases.n_recalibrate, phases.t_success)

    def run_student_phase(self, round_index: int) -> None:
        """N_student iterações de PPO com λ fixo por iteração; só o nível atual move o índice"""
        phases = self.config.curriculum
        ppo = self.config.student_ppo
        self.state = self.state.with_phase(Phase.STUDENT)
        for iteration in range(phases.n_student):
            indices = self._iteration_seed_indices(round_index, Phase.STUDENT, iteration)
            choice = student_lambda_for_iteration(self.state, self.replay_rng, phases.p_old)
            sampler = ScenarioSampler(self.maps.train, self.config, self.seed, indices=indices)
            rollout = collect_student_rollouts(
                self.student,
                TeacherTraffic(self.teacher, choice.lam),
                sampler,
                ppo.steps_per_iteration,
                policy_seed(self.seed, *indices),
            )
            mean_return = _mean_student_return(rollout)
            stats = self._update(self.student, self.student_opt, rollout.buffer, ppo, shuffle_seed(self.seed, *indices))
            sr = success_rate([episode.cause for episode in rollout.episodes])
            if not choice.replay and sr is not None:
                self.state = advance(self.state, sr, phases.t_success, phases.t_fail)
            self._log_metrics(
                round_index, Phase.STUDENT, iteration, choice.lam, len(rollout.episodes), sr, mean_return, stats
            )
            self._log_curriculum(
                round_index,
                Phase.STUDENT,
                iteration,
                choice.lam,
                choice.index,
                choice.replay,
                len(rollout.episodes),
                sr,
                mean_return,
            )

    def run(self) -> CurriculumState:
        """Executa as rodadas restantes (professor -> recalibração opcional -> estudante)"""
        phases = self.config.curriculum
        for round_index in range(self.next_round, phases.total_rounds):
            self.state = replace(self.state, round=round_index)
            if self.next_phase == Phase.TEACHER:
                logger.info(f"Round {round_index}: teacher phase")
                self.run_teacher_phase(round_index)
                self.next_phase = Phase.RECALIBRATE if phases.recalibration_enabled else Phase.STUDENT
                self._save()
            if self.next_phase == Phase.RECALIBRATE:
                logger.info(f"Round {round_index}: recalibration")
                self.run_recalibration(round_index)
                self.next_phase = Phase.STUDENT
                self._save()
            logger.info(f"Round {round_index}: student phase from λ={self.state.current_lambda:+.2f}")
            self.run_student_phase(round_index)
            self.next_round = round_index + 1
            self.next_phase = Phase.TEACHER
            self._save()
        logger.success(f"Curriculum finished: level {self.state.current_index} (λ={self.state.current_lambda:+.2f})")
        return self.state


class BaselineTrainer(_Trainer):
    """
    Estudante de referência: PPO contra NPCs de regras com orçamento igual ao do
    currículo (total_rounds x N_student iterações).
    """

    kind = "baseline"

    def __init__(self, config: RunConfig, out_dir: str | Path, resume: bool = True):
        super().__init__(config, out_dir, resume)
        self.traffic = RuleTraffic(config.baseline)
        self.completed = 0
        if self.resumed:
            self._restore()

    @property
    def total_iterations(self) -> int:
        return self.config.curriculum.total_rounds * self.config.curriculum.n_student

    def _save(self) -> None:
        arrays = {**self.student.to_arrays(), **self.student_opt.to_arrays("student_opt")}
        meta = CheckpointMeta(
            kind=self.kind,
            config_hash=self.config.config_hash(),
            components=["student"],
            next_phase=Phase.STUDENT,
            metrics_rows=self.metrics.rows,
            student_iterations=self.completed,
        )
        save_checkpoint(self.checkpoint_dir, arrays, meta)

    def _restore(self) -> None:
        arrays, meta = load_checkpoint(self.checkpoint_dir, expected_hash=self.config.config_hash())
        self.student.load_arrays(arrays)
        self.student_opt.load_arrays(arrays, "student_opt")
        self.completed = meta.student_iterations
        self.metrics.truncate(meta.metrics_rows)
        logger.info(f"Resumed baseline at iteration {self.completed}/{self.total_iterations}")

    def run(self) -> int:
        """Executa as iterações restantes; checkpoint a cada N_student iterações"""
        n_student = max(self.config.curriculum.n_student, 1)
        ppo = self.config.student_ppo
        while self.completed < self.total_iterations:
            iteration = self.completed
            round_index = iteration // n_student
            indices = (round_index, _PHASE_CODE[Phase.STUDENT], iteration % n_student)
            sampler = ScenarioSampler(self.maps.train, self.config, self.seed, indices=indices)
            rollout = collect_student_rollouts(
                self.student, self.traffic, sampler, ppo.steps_per_iteration, policy_seed(self.seed, *indices)
            )
            mean_return = _mean_student_return(rollout)
            stats = self._update(self.student, self.student_opt, rollout.buffer, ppo, shuffle_seed(self.seed, *indices))
            sr = success_rate([episode.cause for episode in rollout.episodes])
            self._log_metrics(
                round_index, Phase.STUDENT, iteration % n_student, None, len(rollout.episodes), sr, mean_return, stats
            )
            self.completed += 1
            if self.completed % n_student == 0 or self.completed == self.total_iterations:
                self._save()
        logger.success(f"Baseline finished after {self.completed} iterations")
        return self.completed


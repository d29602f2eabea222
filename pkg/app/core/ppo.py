"""
PPO para o estudante e PPO independente com parâmetros compartilhados (IPPO) para os NPCs
do professor: coleta de rollouts, GAE e atualização com objetivo recortado.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from app.constants import NUM_ACTIONS
from app.core import autodiff as ad
from app.core.actors import StudentActor, TrafficSource, sample_action
from app.core.autodiff import Array, ParameterStore, Tape, Tensor
from app.core.errors import ShapeError, TrainingError
from app.core.observation import build_student_obs, build_teacher_obs
from app.core.optim import Adam, clip_grad_norm
from app.core.rewards import driving_reward, npc_reward
from app.core.simulator import STUDENT_ID, World, reset_world, step_episode
from app.core.student_policy import StudentPolicy
from app.core.teacher_policy import TeacherPolicy
from app.models.agent import Action, TerminalCause
from app.models.lane import LaneGraph
from app.schemas.run_config import PpoConfig, RunConfig
from app.utils.logger import get_logger
from app.utils.seeding import STREAM_POLICY, STREAM_SHUFFLE, STREAM_SPAWN, derive_seed

logger = get_logger(__name__)

StreamKey = tuple[int, int]  # (episódio, agente)


class Policy(Protocol):
    store: ParameterStore

    def new_tape(self, grad_enabled: bool = True) -> Tape: ...

    def evaluate(self, tape: Tape, batch) -> tuple[Tensor, Tensor]: ...


# === BUFFER E GAE ===


def compute_gae(
    rewards: Sequence[float],
    values: Sequence[float],
    dones: Sequence[bool],
    gamma: float,
    gae_lambda: float,
    last_value: float = 0.0,
) -> tuple[Array, Array]:
    """
    Estimativa de vantagem generalizada.

    Args:
        last_value: Valor de bootstrap após o último passo (usado só se o último passo não é terminal)

    Returns:
        (vantagens, retornos = vantagens + valores)

    Raises:
        ShapeError: Sequências com tamanhos diferentes
    """
    if not (len(rewards) == len(values) == len(dones)):
        raise ShapeError(f"Tamanhos diferentes: rewards={len(rewards)}, values={len(values)}, dones={len(dones)}")
    rewards_arr = np.asarray(rewards, dtype=np.float64)
    values_arr = np.asarray(values, dtype=np.float64)
    advantages = np.zeros_like(rewards_arr)
    gae = 0.0
    for t in range(len(rewards_arr) - 1, -1, -1):
        next_value = last_value if t == len(rewards_arr) - 1 else values_arr[t + 1]
        nonterminal = 0.0 if dones[t] else 1.0
        delta = rewards_arr[t] + gamma * next_value * nonterminal - values_arr[t]
        gae = delta + gamma * gae_lambda * nonterminal * gae
        advantages[t] = gae
    return advantages, advantages + values_arr


@dataclass
class RolloutBuffer:
    """
    Registros por agente-passo. `observations[obs_index]` é a observação do passo;
    `row` é a linha do agente na saída da política para aquela observação.
    """

    kind: str  # "teacher" | "student"
    observations: list = field(default_factory=list)
    obs_index: list[int] = field(default_factory=list)
    rows: list[int] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    dones: list[bool] = field(default_factory=list)
    streams: dict[StreamKey, list[int]] = field(default_factory=dict)
    bootstrap: dict[StreamKey, float] = field(default_factory=dict)
    advantages: Array | None = None
    returns: Array | None = None

    def __len__(self) -> int:
        return len(self.actions)

    def add_observation(self, observation) -> int:
        self.observations.append(observation)
        return len(self.observations) - 1

    def add(
        self,
        stream: StreamKey,
        obs_index: int,
        row: int,
        action: int,
        log_prob: float,
        value: float,
        reward: float,
        done: bool,
    ) -> None:
        self.streams.setdefault(stream, []).append(len(self.actions))
        self.obs_index.append(obs_index)
        self.rows.append(row)
        self.actions.append(action)
        self.log_probs.append(log_prob)
        self.values.append(value)
        self.rewards.append(reward)
        self.dones.append(done)
        self.advantages = None

    def truncate(self, stream: StreamKey, bootstrap_value: float) -> None:
        """Marca um fluxo interrompido sem estado terminal"""
        self.bootstrap[stream] = bootstrap_value

    def stream_length(self, stream: StreamKey) -> int:
        return len(self.streams.get(stream, []))

    def finalize(self, gamma: float, gae_lambda: float) -> None:
        """Calcula vantagens e retornos por fluxo independente"""
        advantages = np.zeros(len(self))
        returns = np.zeros(len(self))
        for stream, indices in self.streams.items():
            adv, ret = compute_gae(
                [self.rewards[i] for i in indices],
                [self.values[i] for i in indices],
                [self.dones[i] for i in indices],
                gamma,
                gae_lambda,
                self.bootstrap.get(stream, 0.0),
            )
            advantages[indices] = adv
            returns[indices] = ret
        self.advantages = advantages
        self.returns = returns

    def clear(self) -> None:
        for name in ("observations", "obs_index", "rows", "actions", "log_probs", "values", "rewards", "dones"):
            getattr(self, name).clear()
        self.streams.clear()
        self.bootstrap.clear()
        self.advantages = None
        self.returns = None


# === COLETA ===


@dataclass
class CollectedEpisode:
    """Resultado de um episódio completado durante a coleta"""

    lam: float | None
    map_id: str
    cause: TerminalCause
    steps: int
    student_return: float
    route_progress: float


@dataclass
class Rollout:
    buffer: RolloutBuffer
    episodes: list[CollectedEpisode]
    env_steps: int


class ScenarioSampler:
    """Gera mundos reprodutíveis: o episódio e define mapa, spawns e rotas"""

    def __init__(
        self,
        maps: Sequence[LaneGraph],
        config: RunConfig,
        root_seed: int,
        indices: tuple[int, ...] = (),
        spawn_npcs: bool = True,
    ):
        if not maps:
            raise ValueError("Nenhum mapa para amostrar cenários")
        self.maps = tuple(maps)
        self.config = config
        self.root_seed = root_seed
        self.indices = indices
        self.spawn_npcs = spawn_npcs

    def world(self, episode: int) -> World:
        seed = derive_seed(self.root_seed, STREAM_SPAWN, *self.indices, episode)
        rng = np.random.default_rng(seed)
        graph = self.maps[int(rng.integers(len(self.maps)))]
        return reset_world(
            graph,
            self.config.sim,
            rng,
            npc_count=self.config.sim.npc_count if self.spawn_npcs else 0,
            with_student=True,
            history_steps=self.config.observation.history_steps,
            seed=seed,
        )


def _student_reward(result, config: RunConfig) -> float:
    transition = result.transitions.get(STUDENT_ID)
    return driving_reward(transition, config.rewards) if transition is not None else 0.0


def collect_teacher_rollouts(
    teacher: TeacherPolicy,
    student: StudentActor,
    sampler: ScenarioSampler,
    steps: int,
    lambda_source: Callable[[int], float],
    policy_seed: int,
    finish_episodes: bool = True,
) -> Rollout:
    """
    Coleta IPPO: um fluxo por NPC com a sua recompensa individual balanceada por λ.
    O estudante age apenas em inferência; λ é sorteado por episódio por `lambda_source`.

    Args:
        steps: Passos de ambiente mínimos
        finish_episodes: Completa o episódio em andamento ao atingir `steps`
    """
    config = sampler.config
    buffer = RolloutBuffer(kind="teacher")
    episodes: list[CollectedEpisode] = []
    rng = np.random.default_rng(policy_seed)
    env_steps, episode = 0, 0

    while env_steps < steps:
        world = sampler.world(episode)
        lam = lambda_source(episode)
        student_return = 0.0
        while True:
            obs = build_teacher_obs(world, lam)
            log_probs, values = teacher.infer(obs)
            obs_index = buffer.add_observation(obs) if obs.npc_rows else -1
            npc_actions: dict[int, Action] = {}
            chosen: dict[int, tuple[int, int]] = {}
            for row, npc_id in enumerate(obs.npc_ids):
                index = sample_action(log_probs[row], rng)
                npc_actions[npc_id] = Action.from_index(index)
                chosen[npc_id] = (row, index)
            student_action = student.act(world, rng)
            result = step_episode(world, npc_actions, student_action)
            env_steps += 1

            r_student = _student_reward(result, config)
            student_return += r_student
            student_state = world.states[STUDENT_ID]
            for npc_id, (row, index) in chosen.items():
                npc = world.states[npc_id]
                r_npc = driving_reward(result.transitions[npc_id], config.rewards)
                distance = math.hypot(npc.x - student_state.x, npc.y - student_state.y)
                reward = npc_reward(lam, distance, r_npc, r_student, config.rewards).total
                buffer.add(
                    (episode, npc_id),
                    obs_index,
                    row,
                    index,
                    float(log_probs[row, index]),
                    float(values[row]),
                    reward,
                    npc_id in result.events,
                )

            budget_hit = env_steps >= steps and not finish_episodes
            if world.done or budget_hit:
                alive = world.alive_npc_ids
                if alive:
                    final_obs = build_teacher_obs(world, lam)
                    _, final_values = teacher.infer(final_obs)
                    for npc_id, value in zip(final_obs.npc_ids, final_values, strict=True):
                        buffer.truncate((episode, npc_id), float(value))
                if world.done:
                    episodes.append(
                        CollectedEpisode(
                            lam=lam,
                            map_id=world.graph.map_id,
                            cause=world.states[STUDENT_ID].terminal_cause,
                            steps=world.step_count,
                            student_return=student_return,
                            route_progress=world.route_progress(STUDENT_ID),
                        )
                    )
                break
        episode += 1
    logger.debug(f"Collected {len(buffer)} records over {env_steps} env steps ({len(episodes)} episodes finished)")
    return Rollout(buffer=buffer, episodes=episodes, env_steps=env_steps)


def collect_student_rollouts(
    student: StudentPolicy,
    traffic: TrafficSource,
    sampler: ScenarioSampler,
    steps: int,
    policy_seed: int,
    finish_episodes: bool = True,
) -> Rollout:
    """
    Coleta PPO do estudante: um fluxo por episódio com a recompensa de condução.
    Timeout conta como estado terminal.
    """
    config = sampler.config
    neighbors = config.observation.student_neighbors
    buffer = RolloutBuffer(kind="student")
    episodes: list[CollectedEpisode] = []
    rng = np.random.default_rng(policy_seed)
    lam = getattr(traffic, "lam", None)
    env_steps, episode = 0, 0

    while env_steps < steps:
        world = sampler.world(episode)
        student_return = 0.0
        while True:
            vector = build_student_obs(world, neighbors).to_vector()
            log_probs, value = student.infer(vector)
            index = sample_action(log_probs, rng)
            npc_actions = traffic.act(world, rng)
            result = step_episode(world, npc_actions, Action.from_index(index))
            env_steps += 1
            reward = _student_reward(result, config)
            student_return += reward
            obs_index = buffer.add_observation(vector)
            buffer.add((episode, STUDENT_ID), obs_index, 0, index, float(log_probs[index]), value, reward, world.done)

            if world.done:
                episodes.append(
                    CollectedEpisode(
                        lam=lam,
                        map_id=world.graph.map_id,
                        cause=world.states[STUDENT_ID].terminal_cause,
                        steps=world.step_count,
                        student_return=student_return,
                        route_progress=world.route_progress(STUDENT_ID),
                    )
                )
                break
            if env_steps >= steps and not finish_episodes:
                _, bootstrap = student.infer(build_student_obs(world, neighbors).to_vector())
                buffer.truncate((episode, STUDENT_ID), bootstrap)
                break
        episode += 1
    logger.debug(f"Collected {len(buffer)} records over {env_steps} env steps ({len(episodes)} episodes finished)")
    return Rollout(buffer=buffer, episodes=episodes, env_steps=env_steps)


def collect_rollouts(
    policy: TeacherPolicy | StudentPolicy,
    sampler: ScenarioSampler,
    steps: int,
    policy_seed: int,
    lambda_source: Callable[[int], float] | None = None,
    student: StudentActor | None = None,
    traffic: TrafficSource | None = None,
    finish_episodes: bool = True,
) -> Rollout:
    """Despacha a coleta conforme o componente treinado"""
    if isinstance(policy, TeacherPolicy):
        if student is None or lambda_source is None:
            raise ValueError("Coleta do professor exige estudante congelado e fonte de λ")
        return collect_teacher_rollouts(policy, student, sampler, steps, lambda_source, policy_seed, finish_episodes)
    if traffic is None:
        raise ValueError("Coleta do estudante exige uma fonte de tráfego")
    return collect_student_rollouts(policy, traffic, sampler, steps, policy_seed, finish_episodes)


# === ATUALIZAÇÃO ===


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    grad_norm: float
    minibatches: int


def ppo_loss(
    log_probs: Tensor,
    values: Tensor,
    actions: Array,
    old_log_probs: Array,
    advantages: Array,
    returns: Array,
    clip_ratio: float,
    value_coef: float,
    entropy_coef: float,
) -> tuple[Tensor, dict[str, float]]:
    """
    Objetivo recortado do PPO (a ser minimizado):
    -mean(min(ρ·A, clip(ρ, 1-c, 1+c)·A)) + c_v·mean((V - R)²) - c_e·H
    """
    one_hot = np.eye(NUM_ACTIONS)[np.asarray(actions, dtype=int)]
    action_log_prob = ad.sum_(log_probs * one_hot, axis=-1)
    ratio = ad.exp(action_log_prob - old_log_probs)
    surrogate = ad.minimum(ratio * advantages, ad.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * advantages)
    policy_loss = -ad.mean(surrogate)
    value_loss = ad.mean(ad.square(values - returns))
    entropy = -ad.mean(ad.sum_(ad.exp(log_probs) * log_probs, axis=-1))
    loss = policy_loss + value_coef * value_loss - entropy_coef * entropy
    stats = {
        "policy_loss": float(policy_loss.value),
        "value_loss": float(value_loss.value),
        "entropy": float(entropy.value),
        "clip_fraction": float(np.mean(np.abs(ratio.value - 1.0) > clip_ratio)),
    }
    return loss, stats


def _minibatches(buffer: RolloutBuffer, rng: np.random.Generator, minibatch_size: int) -> list[list[int]]:
    """Agrupa observações inteiras até `minibatch_size` registros por lote"""
    per_obs: dict[int, list[int]] = {}
    for record, obs_index in enumerate(buffer.obs_index):
        per_obs.setdefault(obs_index, []).append(record)
    order = [int(i) for i in rng.permutation(sorted(per_obs))]
    batches, current, count = [], [], 0
    for obs_index in order:
        current.append(obs_index)
        count += len(per_obs[obs_index])
        if count >= minibatch_size:
            batches.append(current)
            current, count = [], 0
    if current:
        batches.append(current)
    return batches


def _batch_rows(buffer: RolloutBuffer, obs_indices: list[int]):
    """Entrada da política para as observações e o mapa registro -> linha de saída"""
    position = {obs_index: k for k, obs_index in enumerate(obs_indices)}
    if buffer.kind == "teacher":
        batch = [buffer.observations[i] for i in obs_indices]
        offsets = np.cumsum([0] + [len(obs.npc_rows) for obs in batch])
    else:
        batch = np.stack([buffer.observations[i] for i in obs_indices])
        offsets = np.arange(len(obs_indices) + 1)
    records = [r for r, obs_index in enumerate(buffer.obs_index) if obs_index in position]
    rows = np.array([offsets[position[buffer.obs_index[r]]] + buffer.rows[r] for r in records], dtype=int)
    return batch, np.array(records, dtype=int), rows


def ppo_update(
    policy: Policy,
    optimizer: Adam,
    buffer: RolloutBuffer,
    config: PpoConfig,
    shuffle_seed: int,
) -> UpdateStats:
    """
    Minimiza o objetivo recortado por `epochs` épocas de minibatches.
    Vantagens normalizadas (média 0, desvio 1) uma vez por atualização.

    Raises:
        TrainingError: Perda ou gradiente não finito; parâmetros e otimizador restaurados
    """
    if len(buffer) == 0:
        raise TrainingError("Buffer vazio")
    if buffer.advantages is None:
        buffer.finalize(config.gamma, config.gae_lambda)

    advantages = buffer.advantages - buffer.advantages.mean()
    std = advantages.std()
    if std > 1e-8:
        advantages = advantages / std
    returns = buffer.returns
    actions = np.asarray(buffer.actions)
    old_log_probs = np.asarray(buffer.log_probs)

    param_snapshot = policy.store.snapshot()
    optim_snapshot = optimizer.snapshot()
    rng = np.random.default_rng(shuffle_seed)
    totals = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0}
    grad_norm, count = 0.0, 0

    for _ in range(config.epochs):
        for obs_indices in _minibatches(buffer, rng, config.minibatch_size):
            tape = policy.new_tape()
            batch, records, rows = _batch_rows(buffer, obs_indices)
            log_probs, values = policy.evaluate(tape, batch)
            log_probs = ad.take(log_probs, rows, axis=0)
            values = ad.take(values, rows, axis=0)
            loss, stats = ppo_loss(
                log_probs,
                values,
                actions[records],
                old_log_probs[records],
                advantages[records],
                returns[records],
                config.clip_ratio,
                config.value_coef,
                config.entropy_coef,
            )
            grads = tape.backward(loss)
            grads, norm = clip_grad_norm(grads, config.max_grad_norm)
            if not (math.isfinite(float(loss.value)) and math.isfinite(norm)):
                policy.store.restore(param_snapshot)
                optimizer.restore(optim_snapshot)
                buffer.clear()
                raise TrainingError(f"Perda ou gradiente não finito (loss={float(loss.value)}, norm={norm})")
            optimizer.step(grads)
            for key, value in stats.items():
                totals[key] += value
            grad_norm += norm
            count += 1

    buffer.clear()
    return UpdateStats(
        policy_loss=totals["policy_loss"] / count,
        value_loss=totals["value_loss"] / count,
        entropy=totals["entropy"] / count,
        clip_fraction=totals["clip_fraction"] / count,
        grad_norm=grad_norm / count,
        minibatches=count,
    )


def shuffle_seed(root_seed: int, *indices: int) -> int:
    return derive_seed(root_seed, STREAM_SHUFFLE, *indices)


def policy_seed(root_seed: int, *indices: int) -> int:
    return derive_seed(root_seed, STREAM_POLICY, *indices)


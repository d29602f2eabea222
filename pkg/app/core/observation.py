"""
Observações: grafo totalmente observável do professor e vetor local do estudante.
Inclui a codificação posicional relativa par a par (invariante a rotação e translação).
"""

import math
from dataclasses import dataclass

import numpy as np

from app.constants import (
    GOAL_DISTANCE_SCALE,
    HISTORY_FEATURES,
    NEIGHBOR_DISTANCE_SCALE,
    REL_POS_FEATURES,
    STUDENT_NEIGHBORS,
    V_MAX,
    ZERO_DISTANCE_EPS,
)
from app.core.simulator import STUDENT_ID, World
from app.models.agent import AgentState
from app.models.lane import LaneGraph, RoadOption
from app.utils.geometry import to_local, wrap_angle, wrap_angles

Pose = tuple[float, float, float]


def encode_pair(src_pose: Pose, dst_pose: Pose) -> np.ndarray:
    """
    Codificação relativa de um par ordenado de elementos da cena.

    Returns:
        (distância, sen/cos do bearing no quadro da origem, sen/cos do heading relativo).
        Bearing vale 0 quando a distância é < 1e-6.
    """
    sx, sy, sh = src_pose
    dx, dy, dh = dst_pose
    distance = math.hypot(dx - sx, dy - sy)
    if distance < ZERO_DISTANCE_EPS:
        bearing = 0.0
    else:
        lx, ly = to_local(dx - sx, dy - sy, sh)
        bearing = math.atan2(ly, lx)
    rel_heading = wrap_angle(dh - sh)
    return np.array([distance, math.sin(bearing), math.cos(bearing), math.sin(rel_heading), math.cos(rel_heading)])


def encode_pairs(src_poses: np.ndarray, dst_poses: np.ndarray) -> np.ndarray:
    """Versão vetorizada de encode_pair: (E, 3) x (E, 3) -> (E, 5)"""
    if len(src_poses) == 0:
        return np.zeros((0, REL_POS_FEATURES))
    dx = dst_poses[:, 0] - src_poses[:, 0]
    dy = dst_poses[:, 1] - src_poses[:, 1]
    c, s = np.cos(src_poses[:, 2]), np.sin(src_poses[:, 2])
    lx, ly = c * dx + s * dy, -s * dx + c * dy
    distance = np.hypot(dx, dy)
    bearing = np.where(distance < ZERO_DISTANCE_EPS, 0.0, np.arctan2(ly, lx))
    rel_heading = wrap_angles(dst_poses[:, 2] - src_poses[:, 2])
    return np.stack(
        [distance, np.sin(bearing), np.cos(bearing), np.sin(rel_heading), np.cos(rel_heading)],
        axis=1,
    )


def history_features(states: tuple[AgentState, ...], dt: float) -> np.ndarray:
    """
    Features por pose (H x 5), invariantes a ponto de vista: deslocamento desde a pose
    anterior no quadro da pose atual, velocidade, taxa de guinada e módulo da aceleração.
    """
    rows = np.zeros((len(states), HISTORY_FEATURES))
    for k, state in enumerate(states):
        prev = states[k - 1] if k > 0 else state
        lx, ly = to_local(state.x - prev.x, state.y - prev.y, state.heading)
        rows[k] = (
            lx,
            ly,
            state.speed,
            wrap_angle(state.heading - prev.heading) / dt,
            math.hypot(state.ax, state.ay),
        )
    return rows


@dataclass(frozen=True)
class TeacherObservation:
    """Observação global do professor num passo"""

    agent_ids: tuple[int, ...]
    is_student: tuple[bool, ...]
    histories: np.ndarray  # (A, H, F)
    poses: np.ndarray  # (A, 3) pose atual de cada agente
    road_options: tuple[RoadOption | None, ...]
    lane_graph: LaneGraph
    lam: float
    raw_histories: tuple[tuple[AgentState, ...], ...] = ()

    def __post_init__(self) -> None:
        if not -1.0 <= self.lam <= 1.0:
            raise ValueError(f"λ fora de [-1, 1]: {self.lam}")
        count = len(self.agent_ids)
        if not (len(self.is_student) == len(self.road_options) == len(self.histories) == len(self.poses) == count):
            raise ValueError("Campos por agente com tamanhos inconsistentes")
        for flag, option in zip(self.is_student, self.road_options, strict=True):
            if not flag and option is None:
                raise ValueError("Todo NPC precisa de road option")

    @property
    def npc_rows(self) -> list[int]:
        """Linhas (na ordem da observação) que pertencem a NPCs"""
        return [row for row, flag in enumerate(self.is_student) if not flag]

    @property
    def npc_ids(self) -> list[int]:
        return [self.agent_ids[row] for row in self.npc_rows]


def build_teacher_obs(world: World, lam: float) -> TeacherObservation:
    """
    Observação do professor com todos os agentes vivos (estudante incluído).

    Args:
        world: Mundo em andamento
        lam: Dificuldade λ em [-1, 1]
    """
    ids = [i for i in world.agent_ids if world.states[i].alive]
    raw = tuple(world.histories[i].padded() for i in ids)
    histories = (
        np.stack([history_features(states, world.sim.dt) for states in raw])
        if ids
        else np.zeros((0, world.history_steps, HISTORY_FEATURES))
    )
    poses = np.array([world.states[i].pose for i in ids]) if ids else np.zeros((0, 3))
    flags = tuple(world.has_student and i == STUDENT_ID for i in ids)
    options = tuple(None if flag else world.routes[i].road_option for i, flag in zip(ids, flags, strict=True))
    return TeacherObservation(
        agent_ids=tuple(ids),
        is_student=flags,
        histories=histories,
        poses=poses,
        road_options=options,
        lane_graph=world.graph,
        lam=float(lam),
        raw_histories=raw,
    )


@dataclass(frozen=True)
class StudentObservation:
    """Observação local do estudante, no quadro do ego"""

    ego: np.ndarray  # velocidade, taxa de guinada, acel. longitudinal, acel. lateral
    goal: np.ndarray  # distância, bearing
    neighbors: np.ndarray  # (k, 4): x rel., y rel., heading rel., velocidade rel.
    lane: np.ndarray  # deslocamento lateral, erro de heading

    def to_vector(self) -> np.ndarray:
        """Vetor normalizado de dimensão fixa (4 + 3 + 4k + 2)"""
        speed, yaw_rate, long_acc, lat_acc = self.ego
        distance, bearing = self.goal
        neighbors = self.neighbors.copy()
        neighbors[:, 0:2] /= NEIGHBOR_DISTANCE_SCALE
        neighbors[:, 3] /= V_MAX
        return np.concatenate(
            [
                [speed / V_MAX, yaw_rate, long_acc / 3.0, lat_acc / 3.0],
                [min(distance / GOAL_DISTANCE_SCALE, 2.0), math.sin(bearing), math.cos(bearing)],
                neighbors.ravel(),
                self.lane,
            ]
        )


def build_student_obs(world: World, neighbors: int = STUDENT_NEIGHBORS) -> StudentObservation:
    """
    Observação do estudante: estado do ego, objetivo, k NPCs mais próximos e erro de faixa.
    Vizinhos ordenados por distância crescente; slots vazios zerados.
    """
    ego = world.states[STUDENT_ID]
    history = world.histories[STUDENT_ID].padded()
    prev = history[-2] if len(history) > 1 else ego
    yaw_rate = wrap_angle(ego.heading - prev.heading) / world.sim.dt

    gx, gy = world.routes[STUDENT_ID].goal_position
    distance = math.hypot(gx - ego.x, gy - ego.y)
    lx, ly = to_local(gx - ego.x, gy - ego.y, ego.heading)
    bearing = 0.0 if distance < ZERO_DISTANCE_EPS else math.atan2(ly, lx)

    others = []
    for i in world.alive_npc_ids:
        npc = world.states[i]
        others.append((math.hypot(npc.x - ego.x, npc.y - ego.y), i, npc))
    others.sort(key=lambda item: (item[0], item[1]))

    slots = np.zeros((neighbors, 4))
    for slot, (_, _, npc) in enumerate(others[:neighbors]):
        rx, ry = to_local(npc.x - ego.x, npc.y - ego.y, ego.heading)
        slots[slot] = (rx, ry, wrap_angle(npc.heading - ego.heading), npc.speed - ego.speed)

    lateral, heading_error = world.lane_error(STUDENT_ID)
    return StudentObservation(
        ego=np.array([ego.speed, yaw_rate, ego.long_accel, ego.lat_accel]),
        goal=np.array([distance, bearing]),
        neighbors=slots,
        lane=np.array([lateral, heading_error]),
    )

"""
Modelos de agentes: estado cinemático, histórico de poses, ações discretas e desfecho de episódio.
"""

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace

from app.constants import (
    ACCEL_LEVELS,
    HISTORY_STEPS,
    STEER_LEVELS,
    VEHICLE_LENGTH_M,
    VEHICLE_WIDTH_M,
)


class TerminalCause(enum.StrEnum):
    """Motivo de término de um agente"""

    NONE = "none"
    GOAL = "goal"
    COLLISION = "collision"
    OFFROAD = "offroad"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class AgentState:
    """Estado cinemático de um veículo num instante"""

    x: float
    y: float
    heading: float
    speed: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    half_length: float = VEHICLE_LENGTH_M / 2.0
    half_width: float = VEHICLE_WIDTH_M / 2.0
    alive: bool = True
    terminal_cause: TerminalCause = TerminalCause.NONE

    def __post_init__(self) -> None:
        if not (self.half_length > 0 and self.half_width > 0):
            raise ValueError("half_extents devem ser positivos")
        if abs(self.heading) > math.pi + 1e-12:
            raise ValueError(f"heading fora de [-π, π]: {self.heading}")
        if self.terminal_cause != TerminalCause.NONE and self.alive:
            raise ValueError("Agente com causa terminal não pode estar vivo")

    @property
    def position(self) -> tuple[float, float]:
        return self.x, self.y

    @property
    def pose(self) -> tuple[float, float, float]:
        return self.x, self.y, self.heading

    @property
    def long_accel(self) -> float:
        """Aceleração longitudinal (projeção no heading)"""
        return self.ax * math.cos(self.heading) + self.ay * math.sin(self.heading)

    @property
    def lat_accel(self) -> float:
        """Aceleração lateral (positiva para a esquerda)"""
        return -self.ax * math.sin(self.heading) + self.ay * math.cos(self.heading)

    def terminated(self, cause: TerminalCause) -> "AgentState":
        """Cópia do estado marcada como terminada"""
        return replace(self, alive=False, terminal_cause=cause)


@dataclass(frozen=True)
class Action:
    """Ação discreta: índices na grade de aceleração e de esterço"""

    accel_cmd: int = 1
    steer_cmd: int = 1

    def __post_init__(self) -> None:
        if self.accel_cmd not in (0, 1, 2) or self.steer_cmd not in (0, 1, 2):
            raise ValueError(f"Índices de ação inválidos: {self.accel_cmd}, {self.steer_cmd}")

    @property
    def index(self) -> int:
        """Índice plano 0..8 usado pelas cabeças categóricas"""
        return self.accel_cmd * len(STEER_LEVELS) + self.steer_cmd

    @property
    def acceleration(self) -> float:
        return ACCEL_LEVELS[self.accel_cmd]

    @property
    def steer(self) -> float:
        return STEER_LEVELS[self.steer_cmd]

    @classmethod
    def from_index(cls, index: int) -> "Action":
        index = int(index)
        if not 0 <= index < len(ACCEL_LEVELS) * len(STEER_LEVELS):
            raise ValueError(f"Índice de ação fora da grade: {index}")
        return cls(accel_cmd=index // len(STEER_LEVELS), steer_cmd=index % len(STEER_LEVELS))


IDLE = Action(1, 1)


class AgentHistory:
    """
    Janela deslizante das últimas H poses, da mais antiga para a mais recente.
    Enquanto houver menos de H passos, a mais antiga é repetida no início.
    """

    def __init__(self, horizon: int = HISTORY_STEPS, initial: AgentState | None = None):
        if horizon < 1:
            raise ValueError("Horizonte do histórico deve ser >= 1")
        self.horizon = horizon
        self._states: deque[AgentState] = deque(maxlen=horizon)
        if initial is not None:
            self._states.append(initial)

    def __len__(self) -> int:
        return len(self._states)

    def push(self, state: AgentState) -> None:
        self._states.append(state)

    @property
    def latest(self) -> AgentState:
        return self._states[-1]

    def padded(self) -> tuple[AgentState, ...]:
        """Exatamente H estados, preenchidos repetindo o mais antigo"""
        states = tuple(self._states)
        if not states:
            raise ValueError("Histórico vazio")
        return (states[0],) * (self.horizon - len(states)) + states


@dataclass
class EpisodeOutcome:
    """Desfecho de um episódio do ponto de vista do estudante"""

    student_cause: TerminalCause
    steps: int
    route_progress: float
    mean_velocity: float
    cumulative_reward: float
    npc_mean_velocity: float = 0.0
    speed_profile: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 <= self.route_progress <= 1.0:
            raise ValueError(f"route_progress fora de [0, 1]: {self.route_progress}")

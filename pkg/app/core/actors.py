"""
Quem age no mundo: fontes de tráfego (controlam os NPCs) e atores do estudante
(política treinada ou roteirizada).
"""

from typing import Protocol

import numpy as np

from app.constants import ACCEL_THROTTLE, STEER_RIGHT, STEER_STRAIGHT
from app.core.baseline_npc import rule_actions, rule_policy
from app.core.observation import build_student_obs, build_teacher_obs
from app.core.simulator import STUDENT_ID, World
from app.core.student_policy import StudentPolicy
from app.core.teacher_policy import TeacherPolicy
from app.models.agent import IDLE, Action
from app.schemas.run_config import RuleParams


def sample_action(log_probs: np.ndarray, rng: np.random.Generator) -> int:
    """Sorteia um índice de ação a partir de log-probabilidades (9,)"""
    probs = np.exp(log_probs - log_probs.max())
    probs /= probs.sum()
    return int(rng.choice(len(probs), p=probs))


class TrafficSource(Protocol):
    """Controla os NPCs de um mundo"""

    name: str
    spawns_npcs: bool

    def act(self, world: World, rng: np.random.Generator) -> dict[int, Action]: ...


class NoTraffic:
    """Estrada vazia: nenhum NPC é criado"""

    name = "none"
    spawns_npcs = False
    lam: float | None = None

    def act(self, world: World, rng: np.random.Generator) -> dict[int, Action]:
        return {}


class RuleTraffic:
    """NPCs conduzidos pelo controlador de regras"""

    name = "rule"
    spawns_npcs = True
    lam: float | None = None

    def __init__(self, params: RuleParams):
        self.params = params

    def act(self, world: World, rng: np.random.Generator) -> dict[int, Action]:
        return rule_actions(world, world.alive_npc_ids, self.params)


class TeacherTraffic:
    """NPCs amostrados da política do professor com dificuldade λ fixa"""

    name = "teacher"
    spawns_npcs = True

    def __init__(self, teacher: TeacherPolicy, lam: float):
        if not -1.0 <= lam <= 1.0:
            raise ValueError(f"λ fora de [-1, 1]: {lam}")
        self.teacher = teacher
        self.lam = lam

    def act(self, world: World, rng: np.random.Generator) -> dict[int, Action]:
        obs = build_teacher_obs(world, self.lam)
        if not obs.npc_rows:
            return {}
        log_probs, _ = self.teacher.infer(obs)
        return {
            npc_id: Action.from_index(sample_action(row, rng))
            for npc_id, row in zip(obs.npc_ids, log_probs, strict=True)
        }


class StudentActor(Protocol):
    """Escolhe a ação do estudante (agente 0)"""

    name: str

    def act(self, world: World, rng: np.random.Generator) -> Action: ...


class PolicyStudent:
    """Estudante conduzido por uma StudentPolicy"""

    def __init__(self, policy: StudentPolicy, neighbors: int, greedy: bool = False, name: str = "policy"):
        self.policy = policy
        self.neighbors = neighbors
        self.greedy = greedy
        self.name = name

    def act(self, world: World, rng: np.random.Generator) -> Action:
        vector = build_student_obs(world, self.neighbors).to_vector()
        log_probs, _ = self.policy.infer(vector)
        index = int(np.argmax(log_probs)) if self.greedy else sample_action(log_probs, rng)
        return Action.from_index(index)


class RuleStudent:
    """Estudante roteirizado que segue a rota com o controlador de regras"""

    name = "rule"

    def __init__(self, params: RuleParams):
        self.params = params

    def act(self, world: World, rng: np.random.Generator) -> Action:
        return rule_policy(world, STUDENT_ID, self.params)


class IdleStudent:
    name = "idle"

    def act(self, world: World, rng: np.random.Generator) -> Action:
        return IDLE


class AccelerateStudent:
    """Acelera sempre, sem esterçar"""

    name = "accelerate"

    def act(self, world: World, rng: np.random.Generator) -> Action:
        return Action(accel_cmd=ACCEL_THROTTLE, steer_cmd=STEER_STRAIGHT)


class OffroadStudent:
    """Acelera sempre com esterço máximo à direita: sai da pista rapidamente"""

    name = "offroad"

    def act(self, world: World, rng: np.random.Generator) -> Action:
        return Action(accel_cmd=ACCEL_THROTTLE, steer_cmd=STEER_RIGHT)


def scripted_student(name: str, params: RuleParams) -> StudentActor:
    """Fábrica de estudantes roteirizados por nome"""
    actors: dict[str, StudentActor] = {
        "rule": RuleStudent(params),
        "idle": IdleStudent(),
        "accelerate": AccelerateStudent(),
        "offroad": OffroadStudent(),
    }
    if name not in actors:
        raise ValueError(f"Estudante roteirizado desconhecido: {name}")
    return actors[name]

"""
Máquina de estados do currículo automático: fases alternadas professor/estudante,
escalonamento de λ, recalibração opcional e replay de níveis mais fáceis.

As funções deste módulo são puras; a orquestração (coleta, PPO, checkpoints) fica em
app/services/training_service.py.
"""

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from app.constants import LAMBDA_SET
from app.utils.logger import get_logger

logger = get_logger(__name__)


class Phase(enum.StrEnum):
    """Fase ativa do currículo"""

    TEACHER = "teacher"
    RECALIBRATE = "recalibrate"
    STUDENT = "student"


@dataclass(frozen=True)
class CurriculumState:
    """
    Estado do currículo. `lambda_set` vai do mais fácil (λ=1) ao mais difícil (λ=-1);
    `current_index` aponta o nível atual do estudante.
    """

    lambda_set: tuple[float, ...] = LAMBDA_SET
    current_index: int = 0
    phase: Phase = Phase.TEACHER
    round: int = 0
    success_history: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.lambda_set:
            raise ValueError("lambda_set vazio")
        if any(b >= a for a, b in zip(self.lambda_set, self.lambda_set[1:], strict=False)):
            raise ValueError("lambda_set deve ser estritamente decrescente (fácil -> difícil)")
        if not 0 <= self.current_index < len(self.lambda_set):
            raise ValueError(f"current_index fora do intervalo: {self.current_index}")

    @property
    def current_lambda(self) -> float:
        return self.lambda_set[self.current_index]

    @property
    def hardest_index(self) -> int:
        return len(self.lambda_set) - 1

    def with_phase(self, phase: Phase) -> "CurriculumState":
        return replace(self, phase=phase)


@dataclass(frozen=True)
class LambdaChoice:
    """λ fixado para uma iteração do estudante"""

    lam: float
    index: int
    replay: bool


def advance_index(index: int, success_rate: float, t_success: float, t_fail: float, levels: int) -> int:
    """
    Regra de três ramos: SR > T_success sobe a dificuldade, SR < T_fail desce, senão mantém.
    O índice é saturado em [0, levels - 1].
    """
    if not 0.0 <= success_rate <= 1.0:
        raise ValueError(f"success_rate fora de [0, 1]: {success_rate}")
    if success_rate > t_success:
        return min(index + 1, levels - 1)
    if success_rate < t_fail:
        return max(index - 1, 0)
    return index


def advance(state: CurriculumState, success_rate: float, t_success: float, t_fail: float) -> CurriculumState:
    """Aplica a transição de nível após uma iteração do estudante no nível atual"""
    new_index = advance_index(state.current_index, success_rate, t_success, t_fail, len(state.lambda_set))
    if new_index != state.current_index:
        logger.info(
            f"Curriculum level {state.current_index} -> {new_index} "
            f"(λ={state.lambda_set[new_index]:+.2f}, SR={success_rate:.3f})"
        )
    return replace(
        state,
        current_index=new_index,
        success_history=(*state.success_history, success_rate),
    )


def student_lambda_for_iteration(state: CurriculumState, rng: np.random.Generator, p_old: float) -> LambdaChoice:
    """
    Com probabilidade P_old, um nível estritamente mais fácil sorteado uniformemente;
    senão o nível atual. No nível mais fácil não há replay.
    """
    if not 0.0 <= p_old <= 1.0:
        raise ValueError(f"p_old fora de [0, 1]: {p_old}")
    index = state.current_index
    if index > 0 and rng.random() < p_old:
        easier = int(rng.integers(index))
        return LambdaChoice(lam=state.lambda_set[easier], index=easier, replay=True)
    return LambdaChoice(lam=state.lambda_set[index], index=index, replay=False)


def teacher_lambda(lambda_set: Sequence[float], rng: np.random.Generator) -> float:
    """λ de um episódio do professor: uniforme sobre o conjunto"""
    return float(lambda_set[int(rng.integers(len(lambda_set)))])


def episodes_per_level(n_recalibrate: int, levels: int) -> int:
    """Episódios de recalibração por nível: ⌈N_recalibrate / níveis⌉"""
    return math.ceil(n_recalibrate / levels)


def recalibration_index(success_rates: Sequence[float], t_success: float) -> int:
    """
    Nível inicial após recalibrar: o mais fácil com SR < T_success, ou o mais difícil
    se o estudante supera T_success em todos.
    """
    if not success_rates:
        raise ValueError("Nenhuma taxa de sucesso para recalibrar")
    for index, rate in enumerate(success_rates):
        if rate < t_success:
            return index
    return len(success_rates) - 1


def recalibrate(
    state: CurriculumState,
    evaluate_level: Callable[[int, float, int], float],
    n_recalibrate: int,
    t_success: float,
) -> tuple[CurriculumState, list[float]]:
    """
    Avalia o estudante em todos os níveis e escolhe o nível inicial.

    Args:
        evaluate_level: (índice, λ, episódios) -> taxa de sucesso
        n_recalibrate: Total de episódios, divididos igualmente entre os níveis

    Returns:
        (estado com o novo índice, taxas de sucesso por nível)
    """
    per_level = episodes_per_level(n_recalibrate, len(state.lambda_set))
    rates = [evaluate_level(index, lam, per_level) for index, lam in enumerate(state.lambda_set)]
    index = recalibration_index(rates, t_success)
    logger.info(f"Recalibration picked level {index} (λ={state.lambda_set[index]:+.2f}) from SRs {rates}")
    return replace(state, current_index=index, phase=Phase.RECALIBRATE), rates


def success_rate(causes: Sequence[str]) -> float | None:
    """Fração de episódios terminados em objetivo; None sem episódios"""
    if not causes:
        return None
    return sum(1 for cause in causes if cause == "goal") / len(causes)

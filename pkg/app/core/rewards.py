"""
Recompensas: condução (NPCs e estudante) e a recompensa balanceada por λ dos NPCs.

r_npc = (1 - K(d)) * max(ε, 1 - |λ|) * r_driving_npc          (intrínseca)
      + K(d) * r_driving_student * (λ se |λ| > ε, senão sgn(λ)·ε)  (extrínseca)

com K(d) = exp(-d² / 2σ²) e sgn(0) = +1.
"""

import math
from dataclasses import dataclass

from app.models.agent import TerminalCause
from app.schemas.run_config import RewardParams


@dataclass(frozen=True)
class DrivingTransition:
    """Resumo de um passo de um agente, suficiente para a recompensa de condução"""

    progress_delta_m: float
    lateral_offset: float
    jerk: float
    cause: TerminalCause = TerminalCause.NONE


@dataclass(frozen=True)
class RewardBreakdown:
    """Decomposição da recompensa de um NPC"""

    intrinsic: float
    extrinsic: float
    total: float
    kernel_weight: float


def _check_lambda(lam: float) -> None:
    if not -1.0 <= lam <= 1.0:
        raise ValueError(f"λ fora de [-1, 1]: {lam}")


def rbf_kernel(d: float, sigma: float) -> float:
    """
    Kernel RBF de distância.

    Args:
        d: Distância (m), >= 0
        sigma: Escala (m), > 0

    Returns:
        exp(-d² / (2σ²)), em (0, 1]
    """
    if d < 0 or sigma <= 0:
        raise ValueError(f"Exige d >= 0 e sigma > 0 (d={d}, sigma={sigma})")
    return math.exp(-(d * d) / (2.0 * sigma * sigma))


def driving_reward(transition: DrivingTransition, params: RewardParams) -> float:
    """Recompensa de condução de um passo: progresso, faixa, conforto, termos terminais e custo de tempo"""
    reward = (
        params.progress_weight * transition.progress_delta_m
        + params.lane_weight * abs(transition.lateral_offset)
        + params.jerk_weight * abs(transition.jerk)
        + params.time_penalty
    )
    if transition.cause == TerminalCause.GOAL:
        reward += params.goal_bonus
    elif transition.cause == TerminalCause.COLLISION:
        reward += params.collision_penalty
    elif transition.cause == TerminalCause.OFFROAD:
        reward += params.offroad_penalty
    return reward


def intrinsic_weight(lam: float, epsilon: float) -> float:
    return max(epsilon, 1.0 - abs(lam))


def extrinsic_multiplier(lam: float, epsilon: float) -> float:
    """λ quando |λ| > ε; caso contrário sgn(λ)·ε, com sgn(0) = +1"""
    if abs(lam) > epsilon:
        return lam
    return epsilon if lam >= 0.0 else -epsilon


def intrinsic_reward(lam: float, d: float, r_driving_npc: float, params: RewardParams) -> float:
    _check_lambda(lam)
    return (1.0 - rbf_kernel(d, params.sigma)) * intrinsic_weight(lam, params.epsilon) * r_driving_npc


def extrinsic_reward(lam: float, d: float, r_driving_student: float, params: RewardParams) -> float:
    _check_lambda(lam)
    return rbf_kernel(d, params.sigma) * r_driving_student * extrinsic_multiplier(lam, params.epsilon)


def npc_reward(lam: float, d: float, r_npc: float, r_student: float, params: RewardParams) -> RewardBreakdown:
    """
    Recompensa total de um NPC.

    Args:
        lam: Dificuldade λ em [-1, 1]
        d: Distância entre os centros do NPC e do estudante (m)
        r_npc: Recompensa de condução do próprio NPC no passo
        r_student: Recompensa de condução do estudante no mesmo passo
    """
    intrinsic = intrinsic_reward(lam, d, r_npc, params)
    extrinsic = extrinsic_reward(lam, d, r_student, params)
    return RewardBreakdown(
        intrinsic=intrinsic,
        extrinsic=extrinsic,
        total=intrinsic + extrinsic,
        kernel_weight=rbf_kernel(d, params.sigma),
    )

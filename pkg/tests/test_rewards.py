"""
Testes das recompensas: condução, kernel de distância e balanceamento por λ.
"""

import math

import pytest

from app.core.rewards import (
    DrivingTransition,
    driving_reward,
    extrinsic_multiplier,
    extrinsic_reward,
    intrinsic_reward,
    intrinsic_weight,
    npc_reward,
    rbf_kernel,
)
from app.models.agent import TerminalCause
from app.schemas.run_config import RewardParams


@pytest.fixture
def params() -> RewardParams:
    return RewardParams()


# === KERNEL ===


def test_kernel_is_one_at_zero_distance():
    assert rbf_kernel(0.0, 5.0) == 1.0


def test_kernel_at_one_sigma():
    assert rbf_kernel(5.0, 5.0) == pytest.approx(math.exp(-0.5))


def test_kernel_decreases_with_distance():
    values = [rbf_kernel(d, 5.0) for d in (0.0, 2.0, 5.0, 10.0, 40.0)]
    assert values == sorted(values, reverse=True)
    assert values[-1] > 0.0


@pytest.mark.parametrize("d,sigma", [(-1.0, 5.0), (1.0, 0.0)])
def test_kernel_rejects_invalid_arguments(d, sigma):
    with pytest.raises(ValueError):
        rbf_kernel(d, sigma)


# === BALANCEAMENTO POR λ ===


def test_intrinsic_weight_has_epsilon_floor():
    assert intrinsic_weight(0.0, 0.1) == 1.0
    assert intrinsic_weight(0.5, 0.1) == pytest.approx(0.5)
    assert intrinsic_weight(1.0, 0.1) == pytest.approx(0.1)
    assert intrinsic_weight(-0.95, 0.1) == pytest.approx(0.1)


def test_extrinsic_multiplier_uses_lambda_outside_band():
    assert extrinsic_multiplier(0.7, 0.1) == 0.7
    assert extrinsic_multiplier(-0.7, 0.1) == -0.7


def test_extrinsic_multiplier_inside_band_uses_signed_epsilon():
    assert extrinsic_multiplier(0.05, 0.1) == 0.1
    assert extrinsic_multiplier(-0.05, 0.1) == -0.1
    assert extrinsic_multiplier(0.1, 0.1) == 0.1


def test_sign_of_zero_is_positive():
    assert extrinsic_multiplier(0.0, 0.1) == 0.1
    assert extrinsic_multiplier(-0.0, 0.1) == 0.1


def test_npc_reward_oracle(params):
    # λ = 0.5, d = σ: K = e^-0.5
    k = math.exp(-0.5)
    breakdown = npc_reward(0.5, 5.0, r_npc=2.0, r_student=-4.0, params=params)
    assert breakdown.kernel_weight == pytest.approx(k)
    assert breakdown.intrinsic == pytest.approx((1 - k) * 0.5 * 2.0)
    assert breakdown.extrinsic == pytest.approx(k * -4.0 * 0.5)
    assert breakdown.total == pytest.approx(breakdown.intrinsic + breakdown.extrinsic)


def test_adversarial_npc_is_paid_for_student_loss(params):
    # λ = -1: a recompensa extrínseca inverte o sinal da recompensa do estudante
    breakdown = npc_reward(-1.0, 0.0, r_npc=1.0, r_student=-10.0, params=params)
    assert breakdown.extrinsic == pytest.approx(10.0)
    assert breakdown.intrinsic == pytest.approx(0.0)


def test_far_npc_keeps_mostly_its_own_reward(params):
    breakdown = npc_reward(0.0, 100.0, r_npc=3.0, r_student=5.0, params=params)
    assert breakdown.intrinsic == pytest.approx(3.0, rel=1e-6)
    assert abs(breakdown.extrinsic) < 1e-9


@pytest.mark.parametrize("lam", [-1.01, 1.5])
def test_lambda_out_of_range_is_rejected(params, lam):
    with pytest.raises(ValueError):
        intrinsic_reward(lam, 1.0, 1.0, params)
    with pytest.raises(ValueError):
        extrinsic_reward(lam, 1.0, 1.0, params)


# === CONDUÇÃO ===


def test_driving_reward_dense_terms(params):
    transition = DrivingTransition(progress_delta_m=0.5, lateral_offset=-0.4, jerk=2.0)
    expected = 1.0 * 0.5 - 0.1 * 0.4 - 0.05 * 2.0 - 0.05
    assert driving_reward(transition, params) == pytest.approx(expected)


@pytest.mark.parametrize(
    "cause,bonus",
    [(TerminalCause.GOAL, 10.0), (TerminalCause.COLLISION, -10.0), (TerminalCause.OFFROAD, -10.0), (TerminalCause.TIMEOUT, 0.0)],
)
def test_driving_reward_terminal_terms(params, cause, bonus):
    base = driving_reward(DrivingTransition(0.0, 0.0, 0.0), params)
    assert driving_reward(DrivingTransition(0.0, 0.0, 0.0, cause), params) == pytest.approx(base + bonus)

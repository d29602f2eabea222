"""
Testes das observações: codificação relativa par a par, features de histórico e
vetor local do estudante.
"""

import math

import numpy as np
import pytest

from app.constants import ACCEL_THROTTLE, STEER_LEFT, STEER_STRAIGHT
from app.core.lane_graph import sample_route, spawn_candidates
from app.core.observation import (
    build_student_obs,
    build_teacher_obs,
    encode_pair,
    encode_pairs,
    history_features,
)
from app.core.simulator import STUDENT_ID, place_world, step_episode
from app.models.agent import IDLE, Action, AgentState, TerminalCause
from app.models.lane import RoadOption
from app.schemas.run_config import SimConfig


def _scenario(graph, npc_arms=(1,)):
    """Estudante no braço 0 e um NPC por braço em npc_arms, todos no segmento mais externo"""
    spawns = [next(n for n in spawn_candidates(graph) if n.arm == arm) for arm in (0, *npc_arms)]
    states = [AgentState(x=n.position[0], y=n.position[1], heading=n.heading) for n in spawns]
    routes = [sample_route(graph, n.id, 4) for n in spawns]
    return states, routes


def _drive(world, steps=6):
    student = Action(ACCEL_THROTTLE, STEER_LEFT)
    npc = Action(ACCEL_THROTTLE, STEER_STRAIGHT)
    for _ in range(steps):
        step_episode(world, {i: npc for i in world.alive_npc_ids}, student)
    return world


# === CODIFICAÇÃO RELATIVA ===


def test_encode_pair_known_value():
    enc = encode_pair((0.0, 0.0, 0.0), (0.0, 2.0, math.pi / 2))
    np.testing.assert_allclose(enc, [2.0, 1.0, 0.0, 1.0, 0.0], atol=1e-12)


def test_encode_pair_zero_distance_has_zero_bearing():
    enc = encode_pair((1.0, 1.0, 0.3), (1.0, 1.0, 0.3))
    np.testing.assert_allclose(enc, [0.0, 0.0, 1.0, 0.0, 1.0], atol=1e-12)


def test_encode_pair_is_rigid_invariant(rng):
    for _ in range(50):
        src = (*rng.uniform(-20, 20, 2), rng.uniform(-math.pi, math.pi))
        dst = (*rng.uniform(-20, 20, 2), rng.uniform(-math.pi, math.pi))
        theta, tx, ty = rng.uniform(-math.pi, math.pi), *rng.uniform(-100, 100, 2)
        c, s = math.cos(theta), math.sin(theta)

        def move(p, c=c, s=s, theta=theta, tx=tx, ty=ty):
            return (c * p[0] - s * p[1] + tx, s * p[0] + c * p[1] + ty, p[2] + theta)

        np.testing.assert_allclose(encode_pair(move(src), move(dst)), encode_pair(src, dst), atol=1e-9)


def test_encode_pairs_matches_scalar_version(rng):
    src = np.column_stack([rng.uniform(-10, 10, (20, 2)), rng.uniform(-math.pi, math.pi, 20)])
    dst = np.column_stack([rng.uniform(-10, 10, (20, 2)), rng.uniform(-math.pi, math.pi, 20)])
    expected = np.stack([encode_pair(tuple(a), tuple(b)) for a, b in zip(src, dst, strict=True)])
    np.testing.assert_allclose(encode_pairs(src, dst), expected, atol=1e-12)


def test_encode_pairs_empty():
    assert encode_pairs(np.zeros((0, 3)), np.zeros((0, 3))).shape == (0, 5)


# === HISTÓRICO ===


def test_history_features_of_constant_motion(make_state):
    states = tuple(make_state(x=0.5 * k, speed=5.0, vx=5.0) for k in range(4))
    features = history_features(states, dt=0.1)
    assert features.shape == (4, 5)
    np.testing.assert_allclose(features[1:, 0], 0.5)
    np.testing.assert_allclose(features[:, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(features[:, 2], 5.0)
    # A primeira pose não tem anterior
    assert features[0, 0] == 0.0


# === INVARIÂNCIA A PONTO DE VISTA ===


@pytest.mark.parametrize("rotation,translation", [(0.7, (15.0, -40.0)), (-2.5, (300.0, 120.0))])
def test_observations_are_viewpoint_invariant(x_map, rigid, rotation, translation):
    states, routes = _scenario(x_map)
    graph_b, states_b, routes_b = rigid(x_map, states, routes, rotation, translation)
    world_a = _drive(place_world(x_map, SimConfig(), states, routes, history_steps=4))
    world_b = _drive(place_world(graph_b, SimConfig(), states_b, routes_b, history_steps=4))

    np.testing.assert_allclose(
        build_student_obs(world_a, 3).to_vector(), build_student_obs(world_b, 3).to_vector(), atol=1e-7
    )
    obs_a, obs_b = build_teacher_obs(world_a, 0.5), build_teacher_obs(world_b, 0.5)
    np.testing.assert_allclose(obs_a.histories, obs_b.histories, atol=1e-7)


# === OBSERVAÇÃO DO ESTUDANTE ===


def test_student_vector_dimension(x_map):
    states, routes = _scenario(x_map)
    world = place_world(x_map, SimConfig(), states, routes)
    assert build_student_obs(world).to_vector().shape == (4 + 3 + 4 * 6 + 2,)
    assert build_student_obs(world, neighbors=3).to_vector().shape == (21,)


def test_student_neighbors_sorted_and_padded(x_map):
    states, routes = _scenario(x_map, npc_arms=(1, 2))
    world = place_world(x_map, SimConfig(), states, routes)
    obs = build_student_obs(world, neighbors=4)
    ego = world.states[STUDENT_ID]
    distances = [math.hypot(world.states[i].x - ego.x, world.states[i].y - ego.y) for i in (1, 2)]
    slot_distances = np.hypot(obs.neighbors[:2, 0], obs.neighbors[:2, 1])
    np.testing.assert_allclose(slot_distances, sorted(distances))
    np.testing.assert_array_equal(obs.neighbors[2:], 0.0)


def test_student_goal_bearing_ahead_on_straight_lane(x_map):
    states, routes = _scenario(x_map)
    world = place_world(x_map, SimConfig(), states, routes)
    obs = build_student_obs(world)
    assert obs.goal[0] > 0.0
    assert abs(obs.lane[0]) < 1e-9
    assert abs(obs.lane[1]) < 1e-9


# === OBSERVAÇÃO DO PROFESSOR ===


def test_teacher_obs_marks_student_without_road_option(x_map):
    states, routes = _scenario(x_map, npc_arms=(1, 2))
    world = place_world(x_map, SimConfig(), states, routes, history_steps=4)
    obs = build_teacher_obs(world, -0.25)
    assert obs.is_student == (True, False, False)
    assert obs.road_options[0] is None
    assert all(isinstance(option, RoadOption) for option in obs.road_options[1:])
    assert obs.npc_ids == [1, 2]
    assert obs.histories.shape == (3, 4, 5)


def test_teacher_obs_skips_terminated_agents(x_map):
    states, routes = _scenario(x_map, npc_arms=(1, 2))
    world = place_world(x_map, SimConfig(), states, routes)
    world.states[2] = world.states[2].terminated(TerminalCause.COLLISION)
    step_episode(world, {1: IDLE}, IDLE)
    assert build_teacher_obs(world, 0.0).agent_ids == (0, 1)


def test_teacher_obs_rejects_lambda_out_of_range(x_map):
    states, routes = _scenario(x_map)
    world = place_world(x_map, SimConfig(), states, routes)
    with pytest.raises(ValueError):
        build_teacher_obs(world, 1.5)

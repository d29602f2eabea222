"""
Testes do simulador: cinemática, colisão por eixos separadores, saída de pista e eventos.
"""

import math

import numpy as np
import pytest

from app.constants import ACCEL_BRAKE, ACCEL_IDLE, ACCEL_THROTTLE, STEER_LEFT, STEER_RIGHT, STEER_STRAIGHT
from app.core.errors import EpisodeError
from app.core.lane_graph import sample_route, spawn_candidates
from app.core.simulator import (
    STUDENT_ID,
    check_collision,
    check_offroad,
    episode_outcome,
    footprint,
    place_world,
    reset_world,
    step_episode,
    step_vehicle,
)
from app.models.agent import IDLE, Action, AgentHistory, AgentState, EpisodeOutcome, TerminalCause
from app.schemas.run_config import SimConfig

THROTTLE = Action(ACCEL_THROTTLE, STEER_STRAIGHT)


def _outer_spawn(graph, arm):
    """Segmento de entrada mais distante do cruzamento num braço"""
    return next(node for node in spawn_candidates(graph) if node.arm == arm)


def _state_on(node, **kwargs) -> AgentState:
    return AgentState(x=node.position[0], y=node.position[1], heading=node.heading, **kwargs)


# === CINEMÁTICA ===


def test_throttle_from_rest(make_state):
    state = step_vehicle(make_state(), THROTTLE, dt=0.1)
    assert state.speed == pytest.approx(0.2)
    assert state.x == pytest.approx(0.02)
    assert state.y == pytest.approx(0.0)
    assert state.vx == pytest.approx(0.2)
    assert state.ax == pytest.approx(2.0)
    assert state.long_accel == pytest.approx(2.0)


def test_speed_is_capped_at_v_max(make_state):
    state = step_vehicle(make_state(speed=7.9, vx=7.9), THROTTLE, dt=0.1, v_max=8.0)
    assert state.speed == pytest.approx(8.0)


def test_brake_at_rest_stays_at_rest(make_state):
    state = step_vehicle(make_state(x=1.0, y=2.0), Action(ACCEL_BRAKE, STEER_STRAIGHT), dt=0.1)
    assert state.speed == 0.0
    assert (state.x, state.y) == (1.0, 2.0)


def test_left_steer_increases_heading(make_state):
    state = step_vehicle(make_state(speed=5.0, vx=5.0), Action(ACCEL_IDLE, STEER_LEFT), dt=0.1, wheelbase=2.7)
    assert state.heading == pytest.approx(5.0 / 2.7 * math.tan(0.3) * 0.1)


def test_heading_stays_wrapped(make_state):
    state = make_state(heading=math.pi - 0.001, speed=8.0, vx=-8.0)
    for _ in range(5):
        state = step_vehicle(state, Action(ACCEL_IDLE, STEER_LEFT), dt=0.1)
    assert -math.pi <= state.heading <= math.pi


def test_non_positive_dt_is_rejected(make_state):
    with pytest.raises(ValueError):
        step_vehicle(make_state(), IDLE, dt=0.0)


def test_action_index_grid():
    assert IDLE.index == 4
    assert [Action.from_index(i).index for i in range(9)] == list(range(9))
    with pytest.raises(ValueError):
        Action.from_index(9)


def test_history_pads_with_oldest_state(make_state):
    history = AgentHistory(3, make_state(x=1.0))
    history.push(make_state(x=2.0))
    assert [s.x for s in history.padded()] == [1.0, 1.0, 2.0]
    history.push(make_state(x=3.0))
    history.push(make_state(x=4.0))
    assert [s.x for s in history.padded()] == [2.0, 3.0, 4.0]


# === COLISÃO ===


def test_touching_rectangles_collide(make_state):
    a = make_state()
    b = make_state(x=2 * a.half_length)
    assert check_collision(a, b)


def test_separated_rectangles_do_not_collide(make_state):
    a = make_state()
    b = make_state(x=2 * a.half_length + 1e-6)
    assert not check_collision(a, b)


def test_rotated_rectangles_near_miss(make_state):
    a = make_state(heading=math.pi / 4)
    b = make_state(x=5.5, heading=-math.pi / 4)
    assert not check_collision(a, b)
    assert check_collision(a, make_state(x=3.0, heading=-math.pi / 4))


def _inside(points, state) -> np.ndarray:
    c, s = math.cos(state.heading), math.sin(state.heading)
    rel = points - np.array([state.x, state.y])
    lx = c * rel[:, 0] + s * rel[:, 1]
    ly = -s * rel[:, 0] + c * rel[:, 1]
    return (np.abs(lx) <= state.half_length) & (np.abs(ly) <= state.half_width)


def test_collision_agrees_with_sampled_overlap(make_state):
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = make_state(*rng.uniform(-3, 3, size=2), heading=float(rng.uniform(-math.pi, math.pi)))
        b = make_state(*rng.uniform(-3, 3, size=2), heading=float(rng.uniform(-math.pi, math.pi)))
        corners = footprint(a)
        weights = rng.dirichlet(np.ones(4), size=400)
        samples = weights @ corners
        sampled_overlap = bool(np.any(_inside(samples, b)))
        if sampled_overlap:
            assert check_collision(a, b)


# === SAÍDA DE PISTA ===


def test_vehicle_on_lane_is_on_road(x_map):
    assert not check_offroad(_state_on(_outer_spawn(x_map, 0)), x_map)


def test_vehicle_inside_box_is_on_road(x_map, make_state):
    assert not check_offroad(make_state(heading=0.7), x_map)


def test_vehicle_far_away_is_offroad(x_map, make_state):
    assert check_offroad(make_state(x=0.0, y=100.0), x_map)


# === EVENTOS ===


def test_timeout_ends_episode_and_blocks_further_steps(x_map):
    spawn = _outer_spawn(x_map, 0)
    sim = SimConfig(max_steps=3)
    world = place_world(x_map, sim, [_state_on(spawn)], [sample_route(x_map, spawn.id, 0)])
    for _ in range(3):
        result = step_episode(world, {}, IDLE)
    assert result.done
    assert result.events == {STUDENT_ID: TerminalCause.TIMEOUT}
    assert world.states[STUDENT_ID].terminal_cause == TerminalCause.TIMEOUT
    with pytest.raises(EpisodeError):
        step_episode(world, {}, IDLE)


def test_student_collision_ends_episode(x_map):
    spawn = _outer_spawn(x_map, 0)
    route = sample_route(x_map, spawn.id, 0)
    world = place_world(x_map, SimConfig(), [_state_on(spawn), _state_on(spawn)], [route, route])
    result = step_episode(world, {1: IDLE}, IDLE)
    assert result.events == {0: TerminalCause.COLLISION, 1: TerminalCause.COLLISION}
    assert world.done


def test_npc_collision_does_not_end_episode(x_map):
    student_spawn, npc_spawn = _outer_spawn(x_map, 0), _outer_spawn(x_map, 1)
    routes = [sample_route(x_map, student_spawn.id, 0), sample_route(x_map, npc_spawn.id, 0)]
    states = [_state_on(student_spawn), _state_on(npc_spawn), _state_on(npc_spawn)]
    world = place_world(x_map, SimConfig(), states, [routes[0], routes[1], routes[1]])
    result = step_episode(world, {1: IDLE, 2: IDLE}, IDLE)
    assert result.events == {1: TerminalCause.COLLISION, 2: TerminalCause.COLLISION}
    assert not world.done
    assert world.states[STUDENT_ID].alive
    assert world.alive_npc_ids == []


def test_goal_takes_precedence_over_collision(x_map):
    student_spawn, npc_spawn = _outer_spawn(x_map, 0), _outer_spawn(x_map, 1)
    route = sample_route(x_map, student_spawn.id, 0)
    npc_route = next(
        candidate
        for candidate in (sample_route(x_map, npc_spawn.id, seed) for seed in range(50))
        if math.dist(candidate.goal_position, route.goal_position) > 10.0
    )
    gx, gy = route.goal_position
    at_goal = AgentState(x=gx, y=gy, heading=x_map.node(route.node_ids[-1]).heading)
    world = place_world(x_map, SimConfig(), [at_goal, at_goal], [route, npc_route])
    result = step_episode(world, {1: IDLE}, IDLE)
    assert result.events == {STUDENT_ID: TerminalCause.GOAL, 1: TerminalCause.COLLISION}
    assert not world.states[1].alive
    assert world.states[1].terminal_cause == TerminalCause.COLLISION
    assert world.done
    assert world.route_progress(STUDENT_ID) == 1.0


def test_hard_right_turn_leaves_the_road(x_map):
    spawn = _outer_spawn(x_map, 0)
    world = place_world(x_map, SimConfig(), [_state_on(spawn)], [sample_route(x_map, spawn.id, 0)])
    action = Action(ACCEL_THROTTLE, STEER_RIGHT)
    while not world.done:
        step_episode(world, {}, action)
    assert world.states[STUDENT_ID].terminal_cause == TerminalCause.OFFROAD
    assert world.step_count < 60


def test_terminated_npcs_are_not_stepped(x_map):
    student_spawn, npc_spawn = _outer_spawn(x_map, 0), _outer_spawn(x_map, 1)
    routes = [sample_route(x_map, student_spawn.id, 0), sample_route(x_map, npc_spawn.id, 0)]
    dead = _state_on(npc_spawn).terminated(TerminalCause.COLLISION)
    world = place_world(x_map, SimConfig(), [_state_on(student_spawn), dead], routes)
    step_episode(world, {1: THROTTLE}, IDLE)
    assert world.states[1] == dead
    assert 1 not in world.last_actions


def test_reset_world_spawns_at_rest_with_minimum_gap(x_map, rng):
    sim = SimConfig(npc_count=3)
    world = reset_world(x_map, sim, rng, history_steps=4)
    assert len(world.states) == 4
    assert all(state.speed == 0.0 for state in world.states)
    for i, a in enumerate(world.states):
        for b in world.states[i + 1 :]:
            assert math.hypot(a.x - b.x, a.y - b.y) >= sim.spawn_min_gap


def test_reset_world_is_deterministic(x_map):
    first = reset_world(x_map, SimConfig(), np.random.default_rng(9))
    second = reset_world(x_map, SimConfig(), np.random.default_rng(9))
    assert first.states == second.states
    assert first.routes == second.routes


def test_episode_outcome_summarises_student(x_map):
    spawn = _outer_spawn(x_map, 0)
    world = place_world(x_map, SimConfig(max_steps=5), [_state_on(spawn)], [sample_route(x_map, spawn.id, 0)])
    while not world.done:
        step_episode(world, {}, THROTTLE)
    outcome = episode_outcome(world, cumulative_reward=1.5)
    assert outcome.steps == 5
    assert outcome.student_cause == TerminalCause.TIMEOUT
    assert outcome.speed_profile == pytest.approx([0.2, 0.4, 0.6, 0.8, 1.0])
    assert outcome.mean_velocity == pytest.approx(0.6)
    assert 0.0 < outcome.route_progress < 1.0


def test_outcome_rejects_progress_out_of_range():
    with pytest.raises(ValueError):
        EpisodeOutcome(TerminalCause.GOAL, 1, 1.5, 0.0, 0.0)

"""
Controlador de NPC baseado em regras (substituto do gerenciador de tráfego).

- Direção: pure pursuit para o ponto da rota a `lookahead` metros, corrigido pelo desvio
  previsto em relação à centerline; escolhe o esterço discreto mais próximo do comando.
- Longitudinal: freia atrás de um líder dentro da distância de segurança; a caixa do
  cruzamento é uma zona de exclusão mútua: só o primeiro na fila de prioridade
  (comprometido, chegada prevista, id) passa da linha de parada. Um veículo que já não
  consegue parar antes da linha conta como comprometido.
"""

import math
from dataclasses import dataclass

from app.constants import ACCEL_BRAKE, ACCEL_IDLE, ACCEL_LEVELS, ACCEL_THROTTLE, STEER_LEVELS
from app.core.simulator import World
from app.models.agent import Action
from app.models.lane import LaneRole
from app.schemas.run_config import RuleParams
from app.utils.geometry import wrap_angle

_SPEED_BAND = 0.5
_LEADER_WINDOW_M = 40.0
_STOP_BUFFER_M = 1.5
# Correção lateral da direção (rad por metro de desvio previsto)
_CORRECTION_GAIN = 1.0
_HEADING_PREVIEW_M = 3.0
_TANGENT_HALF_SPAN_M = 1.0


@dataclass(frozen=True)
class BoxPlan:
    """Trecho da rota que atravessa a caixa do cruzamento (em comprimento de arco)"""

    entry: float
    exit: float
    inbound_lane: int


def box_plan(world: World, agent_id: int) -> BoxPlan:
    """Comprimentos de arco de entrada e saída da caixa ao longo da rota do agente"""
    route = world.routes[agent_id]
    travelled = 0.0
    lane = -1
    for node_id in route.node_ids:
        node = world.graph.node(node_id)
        if node.role == LaneRole.CONNECTOR:
            return BoxPlan(entry=travelled, exit=travelled + node.length, inbound_lane=lane)
        lane = node.lane_id
        travelled += node.length
    return BoxPlan(entry=math.inf, exit=math.inf, inbound_lane=lane)


def tracking_error(world: World, agent_id: int) -> tuple[float, float]:
    """(desvio lateral, erro de heading) em relação à centerline da rota; positivos à esquerda"""
    state = world.states[agent_id]
    line = world.centerlines[agent_id]
    projection = line.project(state.x, state.y)
    tangent = line.tangent_at(projection.arc_length, _TANGENT_HALF_SPAN_M)
    return projection.lateral, wrap_angle(state.heading - tangent)


def pursuit_steer(world: World, agent_id: int, lookahead: float) -> int:
    """
    Índice de esterço discreto para seguir a rota.

    O comando contínuo de pure pursuit dá a curvatura da rota à frente; o termo de
    correção empurra o veículo de volta à centerline antes que o desvio previsto
    (lateral + preview * sen(erro de heading)) cresça.
    """
    state = world.states[agent_id]
    line = world.centerlines[agent_id]
    s = line.project(state.x, state.y).arc_length
    tx, ty = line.point_at(s + lookahead)
    distance = max(math.hypot(tx - state.x, ty - state.y), 1e-6)
    alpha = math.atan2(ty - state.y, tx - state.x) - state.heading
    desired = math.atan2(2.0 * world.sim.wheelbase * math.sin(alpha), distance)

    lateral, heading_error = tracking_error(world, agent_id)
    desired -= _CORRECTION_GAIN * (lateral + _HEADING_PREVIEW_M * math.sin(heading_error))
    return min(range(len(STEER_LEVELS)), key=lambda k: (abs(STEER_LEVELS[k] - desired), k))


def _stopping_distance(speed: float, dt: float) -> float:
    return speed * speed / (2.0 * abs(ACCEL_LEVELS[ACCEL_BRAKE])) + speed * dt


def leader_gap(world: World, agent_id: int) -> float:
    """Distância (ao longo da rota) até o agente mais próximo à frente na própria faixa, ou inf"""
    line = world.centerlines[agent_id]
    me = world.states[agent_id]
    s_me = line.project(me.x, me.y).arc_length
    limit = 0.6 * world.graph.lane_width
    best = math.inf
    for other_id in world.agent_ids:
        other = world.states[other_id]
        if other_id == agent_id or not other.alive:
            continue
        if math.hypot(other.x - me.x, other.y - me.y) > _LEADER_WINDOW_M:
            continue
        projection = line.project(other.x, other.y)
        ahead = projection.arc_length - s_me
        if 0.0 < ahead < best and abs(projection.lateral) < limit:
            best = ahead
    return best


def _box_status(world: World, agent_id: int, plan: BoxPlan, margin: float) -> tuple[float, bool, bool]:
    """(distância até a linha de parada, comprometido, já liberou a caixa)"""
    state = world.states[agent_id]
    s = world.progress[agent_id]
    stop_line = plan.entry - margin
    cleared = s >= plan.exit + state.half_length
    committed = stop_line - s < _stopping_distance(state.speed, world.sim.dt) or stop_line <= s
    committed = committed and not cleared
    return stop_line - s, committed, cleared


def box_priority(world: World, params: RuleParams) -> list[int]:
    """
    Fila de prioridade da caixa do cruzamento: agentes comprometidos primeiro, depois
    por chegada prevista (distância / max(v, 1)) e id. Só o primeiro agente de cada
    faixa de entrada disputa a caixa.
    """
    entries = []
    for agent_id in world.agent_ids:
        state = world.states[agent_id]
        if not state.alive:
            continue
        plan = box_plan(world, agent_id)
        if math.isinf(plan.entry):
            continue
        distance, committed, cleared = _box_status(world, agent_id, plan, params.yield_box_margin)
        if cleared or (not committed and distance > params.approach_radius):
            continue
        entries.append((agent_id, plan.inbound_lane, distance, committed, state.speed))

    front_of_lane = {}
    for agent_id, lane, distance, committed, _ in entries:
        if committed:
            continue
        best = front_of_lane.get(lane)
        if best is None or (distance, agent_id) < best:
            front_of_lane[lane] = (distance, agent_id)

    ranked = []
    for agent_id, lane, distance, committed, speed in entries:
        if not committed and front_of_lane[lane][1] != agent_id:
            continue
        arrival = max(distance, 0.0) / max(speed, 1.0)
        ranked.append(((not committed, arrival, agent_id), agent_id))
    ranked.sort()
    return [agent_id for _, agent_id in ranked]


def rule_policy(world: World, agent_id: int, params: RuleParams, priority: list[int] | None = None) -> Action:
    """
    Ação da regra para um agente vivo com rota.

    Args:
        world: Estado atual do mundo (somente leitura)
        agent_id: Agente controlado
        params: Parâmetros da regra
        priority: Fila da caixa já calculada para este passo (opcional)
    """
    state = world.states[agent_id]
    steer = pursuit_steer(world, agent_id, params.lookahead)
    dt = world.sim.dt

    safe_gap = max(params.headway_gap, 2.0 * state.half_length + _stopping_distance(state.speed, dt) + 1.0)
    must_brake = leader_gap(world, agent_id) < safe_gap

    plan = box_plan(world, agent_id)
    if not must_brake and not math.isinf(plan.entry):
        distance, committed, cleared = _box_status(world, agent_id, plan, params.yield_box_margin)
        if not committed and not cleared:
            queue = priority if priority is not None else box_priority(world, params)
            has_right_of_way = bool(queue) and queue[0] == agent_id
            if not has_right_of_way and distance <= _stopping_distance(state.speed, dt) + _STOP_BUFFER_M:
                must_brake = True

    if must_brake:
        accel = ACCEL_BRAKE
    elif state.speed < params.target_speed:
        accel = ACCEL_THROTTLE
    elif state.speed > params.target_speed + _SPEED_BAND:
        accel = ACCEL_BRAKE
    else:
        accel = ACCEL_IDLE
    return Action(accel_cmd=accel, steer_cmd=steer)


def rule_actions(world: World, agent_ids: list[int], params: RuleParams) -> dict[int, Action]:
    """Ações da regra para vários agentes, com a fila da caixa calculada uma vez"""
    priority = box_priority(world, params)
    return {i: rule_policy(world, i, params, priority) for i in agent_ids if world.states[i].alive}

"""
Simulador 2D determinístico de passo fixo: cinemática de bicicleta, colisão por eixos
separadores, detecção de saída de pista e ciclo de vida dos agentes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from app.constants import V_MAX, WHEELBASE_M
from app.core.errors import EpisodeError
from app.core.lane_graph import route_polyline, sample_route, spawn_candidates
from app.core.rewards import DrivingTransition
from app.models.agent import IDLE, Action, AgentHistory, AgentState, EpisodeOutcome, TerminalCause
from app.models.lane import LaneGraph, Route
from app.schemas.run_config import SimConfig
from app.utils.geometry import Polyline, point_segment_distances, rectangle_corners, to_local, wrap_angle
from app.utils.logger import get_logger

logger = get_logger(__name__)

STUDENT_ID = 0
_BOUNDARY_TOLERANCE = 1e-9


def step_vehicle(
    state: AgentState,
    action: Action,
    dt: float,
    v_max: float = V_MAX,
    wheelbase: float = WHEELBASE_M,
) -> AgentState:
    """
    Atualização do modelo cinemático de bicicleta.

    Args:
        state: Estado atual (speed >= 0)
        action: Ação discreta
        dt: Passo de tempo (s)

    Returns:
        Novo estado; velocidade e aceleração 2D consistentes com a mudança de pose
    """
    if dt <= 0:
        raise ValueError(f"dt deve ser positivo (recebido {dt})")
    speed = min(max(state.speed + action.acceleration * dt, 0.0), v_max)
    heading = wrap_angle(state.heading + (speed / wheelbase) * math.tan(action.steer) * dt)
    vx, vy = speed * math.cos(heading), speed * math.sin(heading)
    return AgentState(
        x=state.x + vx * dt,
        y=state.y + vy * dt,
        heading=heading,
        speed=speed,
        vx=vx,
        vy=vy,
        ax=(vx - state.vx) / dt,
        ay=(vy - state.vy) / dt,
        half_length=state.half_length,
        half_width=state.half_width,
    )


def footprint(state: AgentState) -> np.ndarray:
    """Cantos (4x2) do retângulo do veículo"""
    return rectangle_corners(state.x, state.y, state.heading, state.half_length, state.half_width)


def check_collision(a: AgentState, b: AgentState) -> bool:
    """
    Teste de eixos separadores entre dois retângulos orientados.
    Contato na fronteira conta como colisão.
    """
    reach = math.hypot(a.half_length, a.half_width) + math.hypot(b.half_length, b.half_width)
    if math.hypot(a.x - b.x, a.y - b.y) > reach:
        return False

    corners_a, corners_b = footprint(a), footprint(b)
    for heading in (a.heading, b.heading):
        for axis in ((math.cos(heading), math.sin(heading)), (-math.sin(heading), math.cos(heading))):
            axis_vec = np.array(axis)
            proj_a = corners_a @ axis_vec
            proj_b = corners_b @ axis_vec
            if proj_a.max() < proj_b.min() or proj_b.max() < proj_a.min():
                return False
    return True


class DrivableArea:
    """
    Região dirigível de um mapa: união dos corredores das faixas (centerline ± largura/2)
    com o quadrado da caixa do cruzamento. Região fechada.
    """

    def __init__(self, graph: LaneGraph):
        starts, ends, half_widths = [], [], []
        for node in graph.nodes:
            points = np.asarray(node.polyline, dtype=float)
            starts.append(points[:-1])
            ends.append(points[1:])
            half_widths.append(np.full(len(points) - 1, node.width / 2.0))
        self.starts = np.concatenate(starts)
        self.ends = np.concatenate(ends)
        self.half_widths = np.concatenate(half_widths)
        self.box_center = graph.box_center
        self.box_heading = graph.box_heading
        self.box_half_size = graph.box_half_size

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Máscara booleana (P,) de pontos dentro da região"""
        distances = point_segment_distances(points, self.starts, self.ends)
        in_corridor = np.any(distances <= self.half_widths[None, :] + _BOUNDARY_TOLERANCE, axis=1)
        if self.box_half_size <= 0:
            return in_corridor
        c, s = math.cos(self.box_heading), math.sin(self.box_heading)
        rel = points - np.asarray(self.box_center)
        local_x = c * rel[:, 0] + s * rel[:, 1]
        local_y = -s * rel[:, 0] + c * rel[:, 1]
        limit = self.box_half_size + _BOUNDARY_TOLERANCE
        in_box = (np.abs(local_x) <= limit) & (np.abs(local_y) <= limit)
        return in_corridor | in_box

    def in_box(self, x: float, y: float, margin: float = 0.0) -> bool:
        """Ponto dentro da caixa do cruzamento (expandida por margin)"""
        lx, ly = to_local(x - self.box_center[0], y - self.box_center[1], self.box_heading)
        limit = self.box_half_size + margin
        return abs(lx) <= limit and abs(ly) <= limit


_AREA_CACHE: dict[int, tuple[LaneGraph, DrivableArea]] = {}


def drivable_area(graph: LaneGraph) -> DrivableArea:
    """Região dirigível do grafo, memorizada por instância de grafo"""
    cached = _AREA_CACHE.get(id(graph))
    if cached is not None and cached[0] is graph:
        return cached[1]
    if len(_AREA_CACHE) > 64:
        _AREA_CACHE.clear()
    area = DrivableArea(graph)
    _AREA_CACHE[id(graph)] = (graph, area)
    return area


def check_offroad(state: AgentState, graph: LaneGraph) -> bool:
    """Verdadeiro se algum canto do veículo está fora da região dirigível"""
    if not graph.nodes:
        raise ValueError("Grafo vazio")
    return not bool(np.all(drivable_area(graph).contains(footprint(state))))


@dataclass
class StepResult:
    """Eventos de um passo de simulação"""

    events: dict[int, TerminalCause]
    transitions: dict[int, DrivingTransition]
    done: bool


@dataclass
class World:
    """
    Estado mutável de um episódio. O agente 0 é o estudante quando `has_student`;
    os demais são NPCs.
    """

    graph: LaneGraph
    sim: SimConfig
    states: list[AgentState]
    routes: list[Route]
    has_student: bool = True
    history_steps: int = 10
    seed: int = 0
    centerlines: list[Polyline] = field(init=False)
    histories: list[AgentHistory] = field(init=False)
    progress: list[float] = field(init=False)
    step_count: int = field(default=0, init=False)
    done: bool = field(default=False, init=False)
    last_actions: dict[int, Action] = field(default_factory=dict, init=False)
    speed_trace: list[list[float]] = field(init=False)
    area: DrivableArea = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.states) != len(self.routes):
            raise ValueError("Cada agente precisa de uma rota")
        self.area = drivable_area(self.graph)
        self.centerlines = [route_polyline(self.graph, route.node_ids) for route in self.routes]
        self.histories = [AgentHistory(self.history_steps, state) for state in self.states]
        self.progress = [
            min(line.project(s.x, s.y).arc_length, route.goal_arc_length)
            for line, s, route in zip(self.centerlines, self.states, self.routes, strict=True)
        ]
        self.speed_trace = [[] for _ in self.states]

    @property
    def agent_ids(self) -> list[int]:
        return list(range(len(self.states)))

    @property
    def npc_ids(self) -> list[int]:
        start = 1 if self.has_student else 0
        return list(range(start, len(self.states)))

    @property
    def alive_npc_ids(self) -> list[int]:
        return [i for i in self.npc_ids if self.states[i].alive]

    @property
    def student(self) -> AgentState:
        if not self.has_student:
            raise EpisodeError("Este mundo não tem estudante")
        return self.states[STUDENT_ID]

    def route_progress(self, agent_id: int) -> float:
        """Fração da rota percorrida, em [0, 1]"""
        state = self.states[agent_id]
        if state.terminal_cause == TerminalCause.GOAL:
            return 1.0
        goal = self.routes[agent_id].goal_arc_length
        if goal <= 0:
            return 0.0
        return min(max(self.progress[agent_id] / goal, 0.0), 1.0)

    def distance_to_goal(self, agent_id: int) -> float:
        state = self.states[agent_id]
        gx, gy = self.routes[agent_id].goal_position
        return math.hypot(gx - state.x, gy - state.y)

    def lane_error(self, agent_id: int) -> tuple[float, float]:
        """(deslocamento lateral, erro de heading) em relação à centerline da rota"""
        state = self.states[agent_id]
        projection = self.centerlines[agent_id].project(state.x, state.y)
        return projection.lateral, wrap_angle(state.heading - projection.tangent_heading)


def place_world(
    graph: LaneGraph,
    sim: SimConfig,
    states: list[AgentState],
    routes: list[Route],
    has_student: bool = True,
    history_steps: int = 10,
    seed: int = 0,
) -> World:
    """Monta um mundo a partir de estados e rotas já conhecidos (usado por reset e replay)"""
    return World(
        graph=graph,
        sim=sim,
        states=list(states),
        routes=list(routes),
        has_student=has_student,
        history_steps=history_steps,
        seed=seed,
    )


def reset_world(
    graph: LaneGraph,
    sim: SimConfig,
    rng: np.random.Generator,
    npc_count: int | None = None,
    with_student: bool = True,
    history_steps: int = 10,
    seed: int = 0,
) -> World:
    """
    Sorteia spawns em repouso nas faixas de entrada (distância mínima entre agentes)
    e uma rota por agente.

    Args:
        graph: Mapa
        sim: Parâmetros do simulador
        rng: Gerador do fluxo de spawn
        npc_count: Número de NPCs (padrão: sim.npc_count)
        with_student: Se o agente 0 é o estudante
    """
    wanted = (sim.npc_count if npc_count is None else npc_count) + (1 if with_student else 0)
    candidates = spawn_candidates(graph)
    order = rng.permutation(len(candidates))

    chosen = []
    for idx in order:
        node = candidates[int(idx)]
        if all(
            math.hypot(node.position[0] - other.position[0], node.position[1] - other.position[1])
            >= sim.spawn_min_gap
            for other in chosen
        ):
            chosen.append(node)
        if len(chosen) == wanted:
            break
    if len(chosen) < wanted:
        logger.debug(f"Map {graph.map_id}: only {len(chosen)} of {wanted} spawn slots available")

    states, routes = [], []
    for node in chosen:
        routes.append(sample_route(graph, node.id, int(rng.integers(2**31 - 1))))
        states.append(AgentState(x=node.position[0], y=node.position[1], heading=node.heading))
    return place_world(graph, sim, states, routes, with_student, history_steps, seed)


def step_episode(
    world: World,
    npc_actions: dict[int, Action],
    student_action: Action | None = None,
) -> StepResult:
    """
    Avança todos os agentes vivos em dt, de forma síncrona.

    Precedência de eventos num passo: objetivo, colisão, saída de pista, timeout.
    Colisões entre NPCs removem os dois NPCs mas não encerram o episódio.

    Raises:
        EpisodeError: Episódio já terminado
    """
    if world.done:
        raise EpisodeError("Não é possível avançar um episódio terminado")

    sim = world.sim
    alive = [i for i in world.agent_ids if world.states[i].alive]
    previous = {i: world.states[i] for i in alive}

    actions: dict[int, Action] = {}
    for i in alive:
        if world.has_student and i == STUDENT_ID:
            actions[i] = student_action if student_action is not None else IDLE
        else:
            actions[i] = npc_actions.get(i, IDLE)
        world.states[i] = step_vehicle(previous[i], actions[i], sim.dt, sim.v_max, sim.wheelbase)
    world.last_actions = actions
    world.step_count += 1

    deltas: dict[int, float] = {}
    for i in alive:
        state = world.states[i]
        line = world.centerlines[i]
        reached = min(line.project(state.x, state.y).arc_length, world.routes[i].goal_arc_length)
        new_progress = max(world.progress[i], reached)
        deltas[i] = new_progress - world.progress[i]
        world.progress[i] = new_progress
        world.histories[i].push(state)
        world.speed_trace[i].append(state.speed)

    events: dict[int, TerminalCause] = {}
    for i in alive:
        if world.distance_to_goal(i) <= sim.goal_radius:
            events[i] = TerminalCause.GOAL

    # Quem chega ao objetivo mantém GOAL, mas ainda conta como participante da colisão
    for pos, i in enumerate(alive):
        for j in alive[pos + 1 :]:
            if check_collision(world.states[i], world.states[j]):
                events.setdefault(i, TerminalCause.COLLISION)
                events.setdefault(j, TerminalCause.COLLISION)

    for i in alive:
        if i not in events and check_offroad(world.states[i], world.graph):
            events[i] = TerminalCause.OFFROAD

    timed_out = world.step_count >= sim.max_steps
    if timed_out:
        for i in alive:
            events.setdefault(i, TerminalCause.TIMEOUT)

    transitions: dict[int, DrivingTransition] = {}
    for i in alive:
        lateral, _ = world.lane_error(i)
        jerk = (world.states[i].long_accel - previous[i].long_accel) / sim.dt
        transitions[i] = DrivingTransition(
            progress_delta_m=deltas[i],
            lateral_offset=lateral,
            jerk=jerk,
            cause=events.get(i, TerminalCause.NONE),
        )

    for i, cause in events.items():
        world.states[i] = world.states[i].terminated(cause)

    if world.has_student:
        world.done = timed_out or not world.states[STUDENT_ID].alive
    else:
        world.done = timed_out or not any(world.states[i].alive for i in world.agent_ids)
    return StepResult(events=events, transitions=transitions, done=world.done)


def episode_outcome(world: World, cumulative_reward: float) -> EpisodeOutcome:
    """Resume o episódio do ponto de vista do estudante"""
    student = world.states[STUDENT_ID]
    speeds = world.speed_trace[STUDENT_ID]
    npc_speeds = [v for i in world.npc_ids for v in world.speed_trace[i]]
    return EpisodeOutcome(
        student_cause=student.terminal_cause,
        steps=world.step_count,
        route_progress=world.route_progress(STUDENT_ID),
        mean_velocity=float(np.mean(speeds)) if speeds else 0.0,
        cumulative_reward=cumulative_reward,
        npc_mean_velocity=float(np.mean(npc_speeds)) if npc_speeds else 0.0,
        speed_profile=list(speeds),
    )

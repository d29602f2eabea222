"""
Geração procedural de cruzamentos não sinalizados (T e quatro vias), dilatação de
relações e amostragem de rotas.

Convenções:
- Cruzamento centrado na origem; cada braço tem uma faixa de entrada e uma de saída
  (mão direita).
- Faixas de aproximação são quebradas em segmentos de ~5 m.
- Cada conversão legal é um único nó do tipo `intersection` (arco circular
  tangente às duas faixas, ou reta).
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.constants import (
    CONNECTOR_SAMPLES,
    DEFAULT_CORNER_RADIUS_M,
    GOAL_SETBACK_M,
    MAP_DOCUMENT_VERSION,
    SEGMENT_LENGTH_M,
)
from app.core.errors import MapError
from app.models.lane import LaneGraph, LaneNode, LaneRole, NodeType, Relation, RoadOption, Route
from app.schemas.lane_map import LaneGraphDocument
from app.schemas.run_config import MapsConfig
from app.utils.geometry import Polyline, wrap_angle
from app.utils.logger import get_logger
from app.utils.seeding import STREAM_MAP, stream_rng

logger = get_logger(__name__)

T_ARM_HEADINGS = (0.0, math.pi / 2.0, math.pi)
X_ARM_HEADINGS = (0.0, math.pi / 2.0, math.pi, -math.pi / 2.0)


@dataclass(frozen=True)
class MapSet:
    """Conjunto de mapas de treino e de avaliação (hold-out)"""

    train: tuple[LaneGraph, ...]
    holdout: tuple[LaneGraph, ...]

    def by_id(self, map_id: str) -> LaneGraph:
        for graph in (*self.train, *self.holdout):
            if graph.map_id == map_id:
                return graph
        raise MapError(f"Mapa {map_id} não pertence ao conjunto")


def _validate_dimensions(arm_length: float, lane_width: float, corner_radius: float) -> None:
    if not (lane_width > 0 and arm_length > 0):
        raise MapError(f"Dimensões devem ser positivas (arm_length={arm_length}, lane_width={lane_width})")
    if arm_length < 4.0 * lane_width - 1e-9:
        raise MapError(f"arm_length ({arm_length}) deve ser >= 4 * lane_width ({4.0 * lane_width})")
    if corner_radius < 0:
        raise MapError("corner_radius não pode ser negativo")


def connector_option(node: LaneNode) -> RoadOption:
    """Direção da conversão de um nó conector (pelo sinal da curvatura)"""
    if node.curvature > 0:
        return RoadOption.LEFT
    if node.curvature < 0:
        return RoadOption.RIGHT
    return RoadOption.STRAIGHT


def _lane_segments(
    start: np.ndarray, direction: np.ndarray, length: float
) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    count = max(1, round(length / SEGMENT_LENGTH_M))
    step = length / count
    pieces = []
    for j in range(count):
        a = start + direction * (j * step)
        b = start + direction * ((j + 1) * step)
        pieces.append(((float(a[0]), float(a[1])), (float(b[0]), float(b[1]))))
    return pieces


def _fit_connector(
    p0: np.ndarray, h0: float, p1: np.ndarray, h1: float
) -> tuple[tuple[tuple[float, float], ...], float, float]:
    """
    Ajusta a geometria de uma conversão: arco circular tangente às duas faixas.

    Returns:
        (polilinha, comprimento, curvatura com sinal: positiva à esquerda)
    """
    turn = wrap_angle(h1 - h0)
    d0 = np.array([math.cos(h0), math.sin(h0)])
    d1 = np.array([math.cos(h1), math.sin(h1)])

    if abs(turn) < 1e-6:
        points = (tuple(map(float, p0)), tuple(map(float, p1)))
        return points, float(np.linalg.norm(p1 - p0)), 0.0

    # Interseção das retas tangentes: p0 + t0*d0 = p1 - t1*d1
    matrix = np.column_stack([d0, d1])
    t0, t1 = np.linalg.solve(matrix, p1 - p0)
    tangent = min(t0, t1)
    if tangent <= 0:
        raise MapError("Geometria de conversão inválida (tangentes não positivas)")

    radius = tangent / math.tan(abs(turn) / 2.0)
    corner = p0 + t0 * d0
    arc_start = corner - tangent * d0
    normal = np.array([-d0[1], d0[0]]) if turn > 0 else np.array([d0[1], -d0[0]])
    center = arc_start + radius * normal
    phi0 = math.atan2(arc_start[1] - center[1], arc_start[0] - center[0])

    points: list[tuple[float, float]] = []
    if t0 - tangent > 1e-9:
        points.append((float(p0[0]), float(p0[1])))
    for k in range(CONNECTOR_SAMPLES + 1):
        phi = phi0 + turn * k / CONNECTOR_SAMPLES
        points.append((float(center[0] + radius * math.cos(phi)), float(center[1] + radius * math.sin(phi))))
    if t1 - tangent > 1e-9:
        points.append((float(p1[0]), float(p1[1])))

    length = radius * abs(turn) + (t0 - tangent) + (t1 - tangent)
    return tuple(points), float(length), math.copysign(1.0 / radius, turn)


def _build_intersection(
    map_id: str,
    arm_headings: tuple[float, ...],
    arm_length: float,
    lane_width: float,
    corner_radius: float,
) -> LaneGraph:
    _validate_dimensions(arm_length, lane_width, corner_radius)
    box = lane_width + corner_radius
    half_w = lane_width / 2.0

    nodes: list[LaneNode] = []
    successors: list[tuple[int, int]] = []
    inbound_tail: dict[int, tuple[int, np.ndarray, float]] = {}
    outbound_head: dict[int, tuple[int, np.ndarray, float]] = {}
    lane_id = 0

    def add_lane(pieces, heading: float, role: LaneRole, arm: int) -> list[int]:
        nonlocal lane_id
        ids = []
        for a, b in pieces:
            node_id = len(nodes)
            mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
            nodes.append(
                LaneNode(
                    id=node_id,
                    position=mid,
                    heading=wrap_angle(heading),
                    length=math.hypot(b[0] - a[0], b[1] - a[1]),
                    width=lane_width,
                    curvature=0.0,
                    node_type=NodeType.NORMAL,
                    polyline=(a, b),
                    lane_id=lane_id,
                    role=role,
                    arm=arm,
                )
            )
            ids.append(node_id)
        successors.extend(zip(ids[:-1], ids[1:], strict=True))
        lane_id += 1
        return ids

    for arm, theta in enumerate(arm_headings):
        u = np.array([math.cos(theta), math.sin(theta)])
        n = np.array([-math.sin(theta), math.cos(theta)])

        # Faixa de entrada: de fora para dentro, deslocada para +n
        start_in = u * (box + arm_length) + n * half_w
        in_ids = add_lane(_lane_segments(start_in, -u, arm_length), theta + math.pi, LaneRole.INBOUND, arm)
        inbound_tail[arm] = (in_ids[-1], u * box + n * half_w, wrap_angle(theta + math.pi))

        # Faixa de saída: de dentro para fora, deslocada para -n
        start_out = u * box - n * half_w
        out_ids = add_lane(_lane_segments(start_out, u, arm_length), theta, LaneRole.OUTBOUND, arm)
        outbound_head[arm] = (out_ids[0], start_out, wrap_angle(theta))

    for arm_in, (tail_id, p0, h0) in inbound_tail.items():
        for arm_out, (head_id, p1, h1) in outbound_head.items():
            if arm_in == arm_out:
                continue  # sem retorno (U-turn)
            polyline, length, curvature = _fit_connector(p0, h0, p1, h1)
            node_id = len(nodes)
            centerline = Polyline(np.array(polyline))
            mid = centerline.point_at(centerline.length / 2.0)
            heading = centerline.project(*mid).tangent_heading
            nodes.append(
                LaneNode(
                    id=node_id,
                    position=mid,
                    heading=wrap_angle(heading),
                    length=length,
                    width=lane_width,
                    curvature=curvature,
                    node_type=NodeType.INTERSECTION,
                    polyline=polyline,
                    lane_id=lane_id,
                    role=LaneRole.CONNECTOR,
                )
            )
            lane_id += 1
            successors.append((tail_id, node_id))
            successors.append((node_id, head_id))

    base = tuple(sorted(successors))
    edges = {
        Relation.SUCCESSOR: base,
        Relation.PREDECESSOR: tuple(sorted((d, s) for s, d in base)),
        # Faixa única por sentido: não há vizinhos paralelos de mesmo sentido
        Relation.LEFT_NEIGHBOR: (),
        Relation.RIGHT_NEIGHBOR: (),
    }
    graph = LaneGraph(
        map_id=map_id,
        nodes=tuple(nodes),
        edges=edges,
        base_successors=base,
        dilation_power=0,
        box_half_size=box,
        lane_width=lane_width,
        arm_count=len(arm_headings),
    )
    logger.debug(f"Built map {map_id}: {len(nodes)} nodes, {len(base)} successor edges, box={box:.2f} m")
    return graph


def build_t_intersection(
    arm_length: float,
    lane_width: float,
    corner_radius: float = DEFAULT_CORNER_RADIUS_M,
    map_id: str = "t-intersection",
) -> LaneGraph:
    """
    Cruzamento em T: 3 braços, 2 conversões legais por faixa de entrada (6 conectores).

    Args:
        arm_length: Comprimento de cada braço (m), >= 4 * lane_width
        lane_width: Largura de faixa (m)
        corner_radius: Raio de esquina, define o tamanho da caixa do cruzamento

    Raises:
        MapError: Dimensões inválidas
    """
    return _build_intersection(map_id, T_ARM_HEADINGS, arm_length, lane_width, corner_radius)


def build_x_intersection(
    arm_length: float,
    lane_width: float,
    corner_radius: float = DEFAULT_CORNER_RADIUS_M,
    map_id: str = "x-intersection",
) -> LaneGraph:
    """Cruzamento de quatro vias: 4 braços, 3 conversões legais por faixa de entrada (12 conectores)."""
    return _build_intersection(map_id, X_ARM_HEADINGS, arm_length, lane_width, corner_radius)


def dilate(graph: LaneGraph, dilation_power: int) -> LaneGraph:
    """
    Dilata as relações de sucessor/predecessor com potência D.

    As arestas resultantes são a união da alcançabilidade em k saltos, k = 1..D+1,
    sobre a relação de sucessão original. Vizinhos laterais não mudam.
    Idempotente para D fixo (sempre recalcula a partir de `base_successors`).
    """
    if dilation_power < 0:
        raise MapError(f"Potência de dilatação deve ser >= 0 (recebido {dilation_power})")

    adjacency: dict[int, list[int]] = {}
    for src, dst in graph.base_successors:
        adjacency.setdefault(src, []).append(dst)

    dilated: set[tuple[int, int]] = set()
    for node in graph.nodes:
        frontier = {node.id}
        for _ in range(dilation_power + 1):
            frontier = {nxt for cur in frontier for nxt in adjacency.get(cur, ())}
            dilated.update((node.id, reached) for reached in frontier if reached != node.id)
            if not frontier:
                break

    successors = tuple(sorted(dilated))
    edges = dict(graph.edges)
    edges[Relation.SUCCESSOR] = successors
    edges[Relation.PREDECESSOR] = tuple(sorted((d, s) for s, d in successors))
    return LaneGraph(
        map_id=graph.map_id,
        nodes=graph.nodes,
        edges=edges,
        base_successors=graph.base_successors,
        dilation_power=dilation_power,
        box_half_size=graph.box_half_size,
        box_center=graph.box_center,
        box_heading=graph.box_heading,
        lane_width=graph.lane_width,
        arm_count=graph.arm_count,
    )


def route_polyline(graph: LaneGraph, node_ids: tuple[int, ...] | list[int]) -> Polyline:
    """Centerline contínua de uma sequência de nós"""
    points: list[tuple[float, float]] = []
    for node_id in node_ids:
        points.extend(graph.node(node_id).polyline)
    return Polyline(np.array(points))


def spawn_candidates(graph: LaneGraph) -> list[LaneNode]:
    """Nós de faixas de entrada, onde agentes podem nascer"""
    return [node for node in graph.nodes if node.role == LaneRole.INBOUND]


def sample_route(
    graph: LaneGraph,
    spawn_node: int,
    rng_seed: int,
    road_option: RoadOption | None = None,
) -> Route:
    """
    Sorteia uma rota do nó de spawn até o fim de uma faixa de saída, cruzando o
    cruzamento exatamente uma vez.

    Args:
        graph: Grafo (as arestas não dilatadas são usadas)
        spawn_node: Nó numa faixa de entrada
        rng_seed: Semente; a mesma semente produz a mesma rota
        road_option: Restringe a conversão (opcional)

    Raises:
        MapError: Nó inexistente, fora de faixa de entrada ou sem conector alcançável
    """
    start = graph.node(spawn_node)
    if start.role != LaneRole.INBOUND:
        raise MapError(f"Nó {spawn_node} não está numa faixa de entrada")

    rng = np.random.default_rng(rng_seed)
    path = [spawn_node]
    option: RoadOption | None = None
    current = spawn_node
    while True:
        choices = graph.base_successors_of(current)
        if not choices:
            break
        connectors = [c for c in choices if graph.node(c).role == LaneRole.CONNECTOR]
        if connectors:
            if road_option is not None:
                connectors = [c for c in connectors if connector_option(graph.node(c)) == road_option]
                if not connectors:
                    raise MapError(f"Nenhum conector {road_option.value} a partir do nó {current}")
            current = int(connectors[int(rng.integers(len(connectors)))])
            option = connector_option(graph.node(current))
        else:
            current = int(choices[0])
        if current in path:
            raise MapError(f"Ciclo detectado na rota a partir do nó {spawn_node}")
        path.append(current)

    crossings = sum(1 for node_id in path if graph.node(node_id).role == LaneRole.CONNECTOR)
    if crossings != 1 or option is None:
        raise MapError(f"Nó {spawn_node} não tem conector de saída (rota cruza {crossings} vezes)")

    polyline = route_polyline(graph, path)
    goal_s = max(polyline.length - GOAL_SETBACK_M, 0.5 * polyline.length)
    return Route(
        node_ids=tuple(path),
        road_option=option,
        goal_position=polyline.point_at(goal_s),
        goal_arc_length=goal_s,
    )


def generate_map_set(
    seed: int,
    dilation_power: int,
    train_t: int = 3,
    train_x: int = 4,
    holdout_t: int = 1,
    holdout_x: int = 2,
    arm_length_range: tuple[float, float] = (30.0, 50.0),
    lane_width_range: tuple[float, float] = (3.25, 3.75),
    corner_radius_range: tuple[float, float] = (8.0, 10.0),
) -> MapSet:
    """
    Gera as variantes de treino e de hold-out a partir de uma semente.
    Hold-out usa sorteios posteriores do mesmo fluxo, portanto nunca coincide com treino.
    """
    rng = stream_rng(seed, STREAM_MAP)

    def draw(kind: str, split: str, index: int) -> LaneGraph:
        arm = round(float(rng.uniform(*arm_length_range)) * 2.0) / 2.0
        width = round(float(rng.uniform(*lane_width_range)) * 20.0) / 20.0
        corner = round(float(rng.uniform(*corner_radius_range)) * 2.0) / 2.0
        builder = build_t_intersection if kind == "t" else build_x_intersection
        graph = builder(arm, width, corner, map_id=f"{split}-{kind}{index}")
        return dilate(graph, dilation_power)

    train = tuple([draw("t", "train", i) for i in range(train_t)] + [draw("x", "train", i) for i in range(train_x)])
    holdout = tuple(
        [draw("t", "holdout", i) for i in range(holdout_t)] + [draw("x", "holdout", i) for i in range(holdout_x)]
    )
    logger.info(f"Generated map set (seed={seed}): {len(train)} train, {len(holdout)} hold-out, D={dilation_power}")
    return MapSet(train=train, holdout=holdout)


def map_set_from_config(seed: int, maps: MapsConfig) -> MapSet:
    """Conjunto de mapas descrito pela seção `maps` da configuração de execução"""
    return generate_map_set(
        seed,
        maps.dilation_power,
        train_t=maps.train_t,
        train_x=maps.train_x,
        holdout_t=maps.holdout_t,
        holdout_x=maps.holdout_x,
        arm_length_range=(maps.arm_length_min, maps.arm_length_max),
        lane_width_range=(maps.lane_width_min, maps.lane_width_max),
        corner_radius_range=(maps.corner_radius_min, maps.corner_radius_max),
    )


def save_graph(graph: LaneGraph, path: str | Path) -> Path:
    """Grava o grafo como documento JSON versionado"""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(LaneGraphDocument.from_graph(graph).model_dump_json(indent=2), encoding="utf-8")
    return file_path


def load_graph(path: str | Path) -> LaneGraph:
    """
    Carrega um grafo salvo por `save_graph`.

    Raises:
        MapError: Arquivo ausente ou versão de documento incompatível
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise MapError(f"Documento de mapa não encontrado: {file_path}")
    document = LaneGraphDocument.model_validate_json(file_path.read_text(encoding="utf-8"))
    if document.version != MAP_DOCUMENT_VERSION:
        raise MapError(f"Versão de documento de mapa não suportada: {document.version}")
    return document.to_graph()

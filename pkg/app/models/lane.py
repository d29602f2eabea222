"""
Modelos do grafo de faixas: nós (segmentos de faixa), relações, rotas.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from app.core.errors import MapError
from app.utils.geometry import rotate, wrap_angle


class NodeType(enum.StrEnum):
    """Tipo semântico de um segmento de faixa"""

    NORMAL = "normal"
    INTERSECTION = "intersection"
    CROSSWALK = "crosswalk"


class Relation(enum.StrEnum):
    """Relações entre segmentos do grafo de faixas"""

    PREDECESSOR = "predecessor"
    SUCCESSOR = "successor"
    LEFT_NEIGHBOR = "left_neighbor"
    RIGHT_NEIGHBOR = "right_neighbor"


class LaneRole(enum.StrEnum):
    """Papel da faixa dentro do cruzamento"""

    INBOUND = "inbound"
    OUTBOUND = "outbound"
    CONNECTOR = "connector"


class RoadOption(enum.StrEnum):
    """Comando de navegação de alto nível"""

    STRAIGHT = "straight"
    LEFT = "left"
    RIGHT = "right"


ROAD_OPTION_ORDER = (RoadOption.STRAIGHT, RoadOption.LEFT, RoadOption.RIGHT)
NODE_TYPE_ORDER = (NodeType.NORMAL, NodeType.INTERSECTION, NodeType.CROSSWALK)


@dataclass(frozen=True)
class LaneNode:
    """Segmento de faixa (nó do grafo vetorizado)"""

    id: int
    position: tuple[float, float]  # ponto médio do segmento
    heading: float
    length: float
    width: float
    curvature: float
    node_type: NodeType
    polyline: tuple[tuple[float, float], ...]
    lane_id: int
    role: LaneRole
    arm: int = -1

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise MapError(f"Largura do nó {self.id} deve ser positiva")
        if not self.length > 0:
            raise MapError(f"Comprimento do nó {self.id} deve ser positivo")
        if abs(self.heading) > math.pi + 1e-12:
            raise MapError(f"Heading do nó {self.id} fora de [-π, π]")
        if len(self.polyline) < 2:
            raise MapError(f"Nó {self.id} precisa de polilinha com 2+ pontos")

    @property
    def features(self) -> np.ndarray:
        """Atributos invariantes a ponto de vista: largura, comprimento, curvatura e tipo one-hot"""
        one_hot = [1.0 if self.node_type == t else 0.0 for t in NODE_TYPE_ORDER]
        return np.array([self.width, self.length / 5.0, self.curvature * 5.0, *one_hot])

    @property
    def pose(self) -> tuple[float, float, float]:
        return self.position[0], self.position[1], self.heading


@dataclass(frozen=True)
class LaneGraph:
    """
    Grafo de faixas com relações múltiplas.

    `base_successors` guarda as arestas de sucessão não dilatadas; as arestas de
    sucessor/predecessor em `edges` são sempre recalculadas a partir delas.
    """

    map_id: str
    nodes: tuple[LaneNode, ...]
    edges: dict[Relation, tuple[tuple[int, int], ...]]
    base_successors: tuple[tuple[int, int], ...]
    dilation_power: int = 0
    box_half_size: float = 0.0
    box_center: tuple[float, float] = (0.0, 0.0)
    box_heading: float = 0.0
    lane_width: float = 3.5
    arm_count: int = 0
    _index: dict[int, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {node.id: i for i, node in enumerate(self.nodes)}
        if len(index) != len(self.nodes):
            raise MapError("IDs de nós duplicados no grafo")
        object.__setattr__(self, "_index", index)

        for relation, pairs in self.edges.items():
            for src, dst in pairs:
                if src not in index or dst not in index:
                    raise MapError(f"Aresta {relation.value} ({src}, {dst}) referencia nó inexistente")

        successors = set(self.edges.get(Relation.SUCCESSOR, ()))
        predecessors = set(self.edges.get(Relation.PREDECESSOR, ()))
        if predecessors != {(dst, src) for src, dst in successors}:
            raise MapError("Arestas de predecessor não são o reverso exato das de sucessor")
        if self.dilation_power < 0:
            raise MapError("dilation_power deve ser não negativo")

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> LaneNode:
        """Retorna o nó pelo id"""
        try:
            return self.nodes[self._index[node_id]]
        except KeyError as err:
            raise MapError(f"Nó {node_id} não existe no mapa {self.map_id}") from err

    def has_node(self, node_id: int) -> bool:
        return node_id in self._index

    def position_of(self, node_id: int) -> int:
        """Posição (linha) do nó nas matrizes de features"""
        return self._index[node_id]

    def base_successors_of(self, node_id: int) -> list[int]:
        """Sucessores diretos (grafo não dilatado), em ordem determinística"""
        return sorted(dst for src, dst in self.base_successors if src == node_id)

    def edge_index(self, relation: Relation) -> tuple[np.ndarray, np.ndarray]:
        """Arestas de uma relação como índices de linha (src, dst)"""
        pairs = self.edges.get(relation, ())
        if not pairs:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        src = np.array([self._index[s] for s, _ in pairs], dtype=int)
        dst = np.array([self._index[d] for _, d in pairs], dtype=int)
        return src, dst

    @property
    def node_features(self) -> np.ndarray:
        return np.stack([node.features for node in self.nodes])

    @property
    def node_poses(self) -> np.ndarray:
        return np.array([node.pose for node in self.nodes])

    def transformed(self, rotation: float, translation: tuple[float, float]) -> "LaneGraph":
        """Cópia rigidamente transformada (rotação em torno da origem + translação)"""
        tx, ty = translation

        def move(point: tuple[float, float]) -> tuple[float, float]:
            rx, ry = rotate(point[0], point[1], rotation)
            return rx + tx, ry + ty

        nodes = tuple(
            LaneNode(
                id=n.id,
                position=move(n.position),
                heading=wrap_angle(n.heading + rotation),
                length=n.length,
                width=n.width,
                curvature=n.curvature,
                node_type=n.node_type,
                polyline=tuple(move(p) for p in n.polyline),
                lane_id=n.lane_id,
                role=n.role,
                arm=n.arm,
            )
            for n in self.nodes
        )
        return LaneGraph(
            map_id=f"{self.map_id}@rigid({rotation:.6f},{tx:.3f},{ty:.3f})",
            nodes=nodes,
            edges=dict(self.edges),
            base_successors=self.base_successors,
            dilation_power=self.dilation_power,
            box_half_size=self.box_half_size,
            box_center=move(self.box_center),
            box_heading=wrap_angle(self.box_heading + rotation),
            lane_width=self.lane_width,
            arm_count=self.arm_count,
        )


@dataclass(frozen=True)
class Route:
    """Rota de um agente: nós do spawn ao objetivo, comando de navegação e ponto objetivo"""

    node_ids: tuple[int, ...]
    road_option: RoadOption
    goal_position: tuple[float, float]
    goal_arc_length: float = 0.0

    def __post_init__(self) -> None:
        if not self.node_ids:
            raise MapError("Rota precisa de ao menos um nó")

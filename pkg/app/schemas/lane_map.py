"""
Documento JSON versionado do grafo de faixas.
"""

from pydantic import BaseModel, ConfigDict, Field

from app.constants import MAP_DOCUMENT_VERSION
from app.models.lane import LaneGraph, LaneNode, LaneRole, NodeType, Relation


class LaneNodeDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int
    position: tuple[float, float]
    heading: float
    length: float
    width: float
    curvature: float
    node_type: NodeType
    polyline: list[tuple[float, float]]
    lane_id: int
    role: LaneRole
    arm: int = -1


class LaneGraphDocument(BaseModel):
    """Serialização sem perdas de um LaneGraph"""

    model_config = ConfigDict(extra="forbid")

    version: int = Field(MAP_DOCUMENT_VERSION)
    map_id: str
    nodes: list[LaneNodeDocument]
    edges: dict[Relation, list[tuple[int, int]]]
    base_successors: list[tuple[int, int]]
    dilation_power: int = Field(0, ge=0)
    box_half_size: float = 0.0
    box_center: tuple[float, float] = (0.0, 0.0)
    box_heading: float = 0.0
    lane_width: float = 3.5
    arm_count: int = 0

    @classmethod
    def from_graph(cls, graph: LaneGraph) -> "LaneGraphDocument":
        return cls(
            map_id=graph.map_id,
            nodes=[
                LaneNodeDocument(
                    id=n.id,
                    position=n.position,
                    heading=n.heading,
                    length=n.length,
                    width=n.width,
                    curvature=n.curvature,
                    node_type=n.node_type,
                    polyline=list(n.polyline),
                    lane_id=n.lane_id,
                    role=n.role,
                    arm=n.arm,
                )
                for n in graph.nodes
            ],
            edges={relation: list(pairs) for relation, pairs in graph.edges.items()},
            base_successors=list(graph.base_successors),
            dilation_power=graph.dilation_power,
            box_half_size=graph.box_half_size,
            box_center=graph.box_center,
            box_heading=graph.box_heading,
            lane_width=graph.lane_width,
            arm_count=graph.arm_count,
        )

    def to_graph(self) -> LaneGraph:
        nodes = tuple(
            LaneNode(
                id=n.id,
                position=tuple(n.position),
                heading=n.heading,
                length=n.length,
                width=n.width,
                curvature=n.curvature,
                node_type=n.node_type,
                polyline=tuple(tuple(p) for p in n.polyline),
                lane_id=n.lane_id,
                role=n.role,
                arm=n.arm,
            )
            for n in self.nodes
        )
        return LaneGraph(
            map_id=self.map_id,
            nodes=nodes,
            edges={relation: tuple(tuple(p) for p in pairs) for relation, pairs in self.edges.items()},
            base_successors=tuple(tuple(p) for p in self.base_successors),
            dilation_power=self.dilation_power,
            box_half_size=self.box_half_size,
            box_center=tuple(self.box_center),
            box_heading=self.box_heading,
            lane_width=self.lane_width,
            arm_count=self.arm_count,
        )

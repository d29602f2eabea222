"""
Formato JSONL dos logs de cenário: uma linha de cabeçalho seguida de uma linha por passo.

O cabeçalho embute o documento do mapa, as rotas e os estados iniciais, de modo que o
replay não precisa de nenhuma outra entrada.
"""

from pydantic import BaseModel, ConfigDict, Field

from app.constants import SCENARIO_LOG_VERSION
from app.models.agent import AgentState, TerminalCause
from app.models.lane import RoadOption, Route
from app.schemas.lane_map import LaneGraphDocument
from app.schemas.run_config import SimConfig


class AgentStateRecord(BaseModel):
    """Estado completo de um agente num instante"""

    model_config = ConfigDict(extra="forbid")

    id: int
    x: float
    y: float
    heading: float
    speed: float
    vx: float
    vy: float
    ax: float
    ay: float
    half_length: float
    half_width: float
    alive: bool
    cause: TerminalCause = TerminalCause.NONE
    action: int | None = Field(None, ge=0, le=8, description="Ação aplicada para chegar a este estado")

    @classmethod
    def from_state(cls, agent_id: int, state: AgentState, action: int | None = None) -> "AgentStateRecord":
        return cls(
            id=agent_id,
            x=state.x,
            y=state.y,
            heading=state.heading,
            speed=state.speed,
            vx=state.vx,
            vy=state.vy,
            ax=state.ax,
            ay=state.ay,
            half_length=state.half_length,
            half_width=state.half_width,
            alive=state.alive,
            cause=state.terminal_cause,
            action=action,
        )

    def to_state(self) -> AgentState:
        return AgentState(
            x=self.x,
            y=self.y,
            heading=self.heading,
            speed=self.speed,
            vx=self.vx,
            vy=self.vy,
            ax=self.ax,
            ay=self.ay,
            half_length=self.half_length,
            half_width=self.half_width,
            alive=self.alive,
            terminal_cause=self.cause,
        )


class RouteRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    node_ids: list[int]
    road_option: RoadOption
    goal_position: tuple[float, float]
    goal_arc_length: float

    @classmethod
    def from_route(cls, route: Route) -> "RouteRecord":
        return cls(
            node_ids=list(route.node_ids),
            road_option=route.road_option,
            goal_position=route.goal_position,
            goal_arc_length=route.goal_arc_length,
        )

    def to_route(self) -> Route:
        return Route(
            node_ids=tuple(self.node_ids),
            road_option=self.road_option,
            goal_position=tuple(self.goal_position),
            goal_arc_length=self.goal_arc_length,
        )


class ScenarioHeader(BaseModel):
    """Primeira linha do log"""

    model_config = ConfigDict(extra="forbid")

    kind: str = "header"
    version: int = SCENARIO_LOG_VERSION
    label: str = ""
    seed: int
    has_student: bool
    history_steps: int = Field(ge=1)
    sim: SimConfig
    lane_map: LaneGraphDocument
    routes: list[RouteRecord]
    initial: list[AgentStateRecord]


class ScenarioStep(BaseModel):
    """Linha de um passo: estados de todos os agentes no instante t"""

    model_config = ConfigDict(extra="forbid")

    kind: str = "step"
    t: int = Field(ge=1)
    agents: list[AgentStateRecord]
    done: bool = False

"""
Schemas do relatório de avaliação e dos registros por episódio.
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.agent import TerminalCause


class MeanStd(BaseModel):
    """Média e desvio-padrão (populacional) de uma métrica"""

    model_config = ConfigDict(frozen=True)

    mean: float
    std: float = Field(ge=0.0)

    @classmethod
    def of(cls, values: list[float]) -> "MeanStd":
        if not values:
            return cls(mean=0.0, std=0.0)
        mean = math.fsum(values) / len(values)
        variance = math.fsum((v - mean) ** 2 for v in values) / len(values)
        return cls(mean=mean, std=math.sqrt(max(variance, 0.0)))


class EpisodeRecord(BaseModel):
    """Uma linha de episodes.jsonl"""

    model_config = ConfigDict(extra="forbid")

    cell: str
    student: str
    traffic: str
    lam: float | None = None
    episode: int = Field(ge=0)
    map_id: str
    cause: TerminalCause
    steps: int = Field(ge=0)
    route_progress: float = Field(ge=0.0, le=1.0)
    mean_velocity: float
    cumulative_reward: float
    npc_mean_velocity: float = 0.0
    speeds: list[float] = Field(default_factory=list)


class EvalCell(BaseModel):
    """Métricas de um par (fonte de tráfego, estudante)"""

    model_config = ConfigDict(extra="forbid")

    student: str
    traffic: str
    lam: float | None = None
    episodes: int = Field(ge=1)
    success_rate: float = Field(ge=0.0, le=1.0)
    collision_rate: float = Field(ge=0.0, le=1.0)
    offroad_rate: float = Field(ge=0.0, le=1.0)
    timeout_rate: float = Field(ge=0.0, le=1.0)
    route_progress: MeanStd
    velocity: MeanStd
    reward: MeanStd
    npc_velocity: MeanStd

    @model_validator(mode="after")
    def validate_partition(self) -> "EvalCell":
        total = self.success_rate + self.collision_rate + self.offroad_rate + self.timeout_rate
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Taxas de término devem somar 1 (soma={total})")
        return self

    @property
    def label(self) -> str:
        return cell_label(self.student, self.traffic, self.lam)

    @classmethod
    def from_records(cls, records: list[EpisodeRecord]) -> "EvalCell":
        """Agrega os episódios de uma célula"""
        if not records:
            raise ValueError("Célula de avaliação sem episódios")
        n = len(records)
        counts = {cause: sum(1 for r in records if r.cause == cause) for cause in TerminalCause}
        head = records[0]
        return cls(
            student=head.student,
            traffic=head.traffic,
            lam=head.lam,
            episodes=n,
            success_rate=counts[TerminalCause.GOAL] / n,
            collision_rate=counts[TerminalCause.COLLISION] / n,
            offroad_rate=counts[TerminalCause.OFFROAD] / n,
            # NONE só aparece em episódios interrompidos; conta como timeout
            timeout_rate=(counts[TerminalCause.TIMEOUT] + counts[TerminalCause.NONE]) / n,
            route_progress=MeanStd.of([r.route_progress for r in records]),
            velocity=MeanStd.of([r.mean_velocity for r in records]),
            reward=MeanStd.of([r.cumulative_reward for r in records]),
            npc_velocity=MeanStd.of([r.npc_mean_velocity for r in records]),
        )


class EvalReport(BaseModel):
    """Relatório de avaliação: uma célula por (estudante, tráfego, λ)"""

    model_config = ConfigDict(extra="forbid")

    seed: int
    episodes_per_cell: int = Field(ge=1)
    maps: list[str]
    config_hash: str
    cells: list[EvalCell]

    def cell(self, student: str, traffic: str, lam: float | None = None) -> EvalCell:
        for cell in self.cells:
            if cell.student == student and cell.traffic == traffic and cell.lam == lam:
                return cell
        raise KeyError(cell_label(student, traffic, lam))


def cell_label(student: str, traffic: str, lam: float | None) -> str:
    """Rótulo estável de uma célula, ex.: `ppo@teacher(-0.50)`"""
    if lam is None:
        return f"{student}@{traffic}"
    return f"{student}@{traffic}({lam:+.2f})"

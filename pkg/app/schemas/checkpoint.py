"""
Metadados de checkpoint (JSON ao lado do arquivo .npz com parâmetros e momentos do Adam).
"""

from pydantic import BaseModel, ConfigDict, Field

from app.constants import CHECKPOINT_FORMAT_VERSION, LAMBDA_SET
from app.core.curriculum import CurriculumState, Phase


class CurriculumStateDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lambda_set: list[float] = Field(default_factory=lambda: list(LAMBDA_SET))
    current_index: int = Field(0, ge=0)
    phase: Phase = Phase.TEACHER
    round: int = Field(0, ge=0)
    success_history: list[float] = Field(default_factory=list)

    @classmethod
    def from_state(cls, state: CurriculumState) -> "CurriculumStateDocument":
        return cls(
            lambda_set=list(state.lambda_set),
            current_index=state.current_index,
            phase=state.phase,
            round=state.round,
            success_history=list(state.success_history),
        )

    def to_state(self) -> CurriculumState:
        return CurriculumState(
            lambda_set=tuple(self.lambda_set),
            current_index=self.current_index,
            phase=self.phase,
            round=self.round,
            success_history=tuple(self.success_history),
        )


class CheckpointMeta(BaseModel):
    """
    Posição da execução no momento do checkpoint.

    `next_round`/`next_phase` indicam onde a execução retomada continua;
    `metrics_rows`/`curriculum_rows` permitem truncar os CSVs para o ponto salvo.
    """

    model_config = ConfigDict(extra="forbid")

    version: int = CHECKPOINT_FORMAT_VERSION
    kind: str = Field(description="curriculum | baseline | teacher | student")
    config_hash: str
    components: list[str]
    next_round: int = Field(0, ge=0)
    next_phase: Phase = Phase.TEACHER
    curriculum: CurriculumStateDocument | None = None
    replay_rng_state: str | None = Field(None, description="Estado JSON do gerador de replay de λ")
    metrics_rows: int = Field(0, ge=0)
    curriculum_rows: int = Field(0, ge=0)
    student_iterations: int = Field(0, ge=0)

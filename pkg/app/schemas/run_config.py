"""
Schemas Pydantic da configuração de execução (arquivo YAML único).

Um arquivo vazio produz a configuração padrão do laboratório; chaves desconhecidas
são rejeitadas em todas as seções.
"""

import hashlib
import json
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app import constants
from app.core.errors import ConfigError

SCRIPTED_STUDENTS = ("rule", "idle", "accelerate", "offroad")
TRAFFIC_KINDS = ("rule", "teacher", "none")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MapsConfig(_Section):
    """Geração procedural dos mapas de treino e hold-out"""

    dilation_power: int = Field(constants.DILATION_POWER, ge=0, le=8, description="Potência de dilatação D")
    train_t: int = Field(3, ge=0)
    train_x: int = Field(4, ge=0)
    holdout_t: int = Field(1, ge=0)
    holdout_x: int = Field(2, ge=0)
    arm_length_min: float = Field(30.0, gt=0)
    arm_length_max: float = Field(50.0, gt=0)
    lane_width_min: float = Field(3.25, gt=0)
    lane_width_max: float = Field(3.75, gt=0)
    corner_radius_min: float = Field(constants.DEFAULT_CORNER_RADIUS_M, ge=0)
    corner_radius_max: float = Field(10.0, ge=0)

    @model_validator(mode="after")
    def validate_ranges(self) -> "MapsConfig":
        if self.arm_length_min > self.arm_length_max:
            raise ValueError("arm_length_min deve ser <= arm_length_max")
        if self.lane_width_min > self.lane_width_max:
            raise ValueError("lane_width_min deve ser <= lane_width_max")
        if self.corner_radius_min > self.corner_radius_max:
            raise ValueError("corner_radius_min deve ser <= corner_radius_max")
        if self.arm_length_min < 4.0 * self.lane_width_max:
            raise ValueError("arm_length_min deve ser >= 4 * lane_width_max")
        if self.train_t + self.train_x == 0:
            raise ValueError("É necessário ao menos um mapa de treino")
        if self.holdout_t + self.holdout_x == 0:
            raise ValueError("É necessário ao menos um mapa de hold-out")
        return self


class SimConfig(_Section):
    """Parâmetros do simulador"""

    dt: float = Field(constants.DT_SECONDS, gt=0, le=1.0)
    max_steps: int = Field(constants.MAX_STEPS, ge=1)
    npc_count: int = Field(constants.DEFAULT_NPC_COUNT, ge=0, le=32)
    v_max: float = Field(constants.V_MAX, gt=0)
    wheelbase: float = Field(constants.WHEELBASE_M, gt=0)
    goal_radius: float = Field(constants.GOAL_RADIUS_M, gt=0)
    spawn_min_gap: float = Field(constants.SPAWN_MIN_GAP_M, gt=0)


class ObservationConfig(_Section):
    """Formato das observações"""

    history_steps: int = Field(constants.HISTORY_STEPS, ge=3, description="H; >= tamanho do kernel da convolução")
    student_neighbors: int = Field(constants.STUDENT_NEIGHBORS, ge=1)

    @property
    def student_dim(self) -> int:
        return 4 + 3 + 4 * self.student_neighbors + 2


class NetworkConfig(_Section):
    """Tamanhos das redes do professor e do estudante"""

    hidden: int = Field(64, ge=2, description="Largura dos embeddings e do GRU")
    lambda_dim: int = Field(16, ge=1)
    map_layers: int = Field(2, ge=0)
    attention_radius: float = Field(constants.ATTENTION_RADIUS_M, gt=0)
    agent_radius: float = Field(constants.AGENT_RADIUS_M, gt=0)
    student_hidden: int = Field(64, ge=2)


class RewardParams(_Section):
    """Pesos da recompensa de condução e parâmetros do balanceamento por λ"""

    epsilon: float = Field(constants.REWARD_EPSILON, gt=0.0, le=0.1)
    sigma: float = Field(constants.RBF_SIGMA, gt=0.0)
    progress_weight: float = Field(1.0, ge=0.0)
    lane_weight: float = Field(-0.1, le=0.0)
    jerk_weight: float = Field(-0.05, le=0.0)
    goal_bonus: float = Field(10.0, ge=0.0)
    collision_penalty: float = Field(-10.0, le=0.0)
    offroad_penalty: float = Field(-10.0, le=0.0)
    time_penalty: float = Field(-0.05, le=0.0)


class PpoConfig(_Section):
    """Hiperparâmetros do PPO"""

    clip_ratio: float = Field(0.2, gt=0.0, lt=1.0)
    gamma: float = Field(0.99, gt=0.0, le=1.0)
    gae_lambda: float = Field(0.95, ge=0.0, le=1.0)
    learning_rate: float = Field(3e-4, gt=0.0)
    epochs: int = Field(4, ge=1)
    minibatch_size: int = Field(256, ge=1)
    entropy_coef: float = Field(0.01, ge=0.0)
    value_coef: float = Field(0.5, ge=0.0)
    steps_per_iteration: int = Field(4096, ge=1)
    max_grad_norm: float = Field(0.5, gt=0.0)


class PhaseConfig(_Section):
    """Parâmetros do currículo automático"""

    n_teacher: int = Field(constants.N_TEACHER, ge=0)
    n_student: int = Field(constants.N_STUDENT, ge=0)
    n_recalibrate: int = Field(constants.N_RECALIBRATE, ge=1)
    t_success: float = Field(constants.T_SUCCESS, ge=0.0, le=1.0)
    t_fail: float = Field(constants.T_FAIL, ge=0.0, le=1.0)
    p_old: float = Field(constants.P_OLD, ge=0.0, le=1.0)
    recalibration_enabled: bool = False
    total_rounds: int = Field(10, ge=1)

    @model_validator(mode="after")
    def validate_thresholds(self) -> "PhaseConfig":
        if not self.t_fail < self.t_success:
            raise ValueError(f"Exige 0 <= T_fail < T_success <= 1 (T_fail={self.t_fail}, T_success={self.t_success})")
        return self


class RuleParams(_Section):
    """Controlador de NPC baseado em regras"""

    target_speed: float = Field(5.0, gt=0.0)
    headway_gap: float = Field(10.0, gt=0.0)
    yield_box_margin: float = Field(1.0, ge=0.0, description="Distância da linha de parada à caixa do cruzamento")
    lookahead: float = Field(8.0, gt=0.0)
    approach_radius: float = Field(25.0, gt=0.0, description="Distância à linha de parada para disputar a caixa")

    @field_validator("target_speed")
    @classmethod
    def validate_target_speed(cls, v: float) -> float:
        if v > constants.V_MAX:
            raise ValueError(f"target_speed ({v}) não pode exceder v_max ({constants.V_MAX})")
        return v

    @field_validator("headway_gap")
    @classmethod
    def validate_headway(cls, v: float) -> float:
        if v <= constants.VEHICLE_LENGTH_M:
            raise ValueError(f"headway_gap ({v}) deve ser maior que o comprimento do veículo")
        return v


class EvaluationConfig(_Section):
    """
    Matriz de avaliação: estudantes x fontes de tráfego.

    `students` mapeia rótulo -> origem; a origem é `scripted:<nome>` ou o caminho de um checkpoint.
    """

    episodes: int = Field(constants.DEFAULT_EVAL_EPISODES, ge=1)
    lambdas: list[float] = Field(default_factory=lambda: list(constants.EVAL_LAMBDAS))
    traffic: list[str] = Field(default_factory=lambda: ["rule", "teacher"])
    students: dict[str, str] = Field(default_factory=lambda: {"rule": "scripted:rule"})
    teacher_checkpoint: str | None = None
    use_holdout: bool = True
    write_scenarios: bool = False

    @field_validator("lambdas")
    @classmethod
    def validate_lambdas(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("Informe ao menos um λ")
        for lam in v:
            if not -1.0 <= lam <= 1.0:
                raise ValueError(f"λ fora de [-1, 1]: {lam}")
        return v

    @field_validator("traffic")
    @classmethod
    def validate_traffic(cls, v: list[str]) -> list[str]:
        unknown = [t for t in v if t not in TRAFFIC_KINDS]
        if unknown or not v:
            raise ValueError(f"Fontes de tráfego inválidas: {unknown}. Use {list(TRAFFIC_KINDS)}")
        return v

    @field_validator("students")
    @classmethod
    def validate_students(cls, v: dict[str, str]) -> dict[str, str]:
        for label, source in v.items():
            if source.startswith("scripted:") and source.removeprefix("scripted:") not in SCRIPTED_STUDENTS:
                raise ValueError(f"Estudante roteirizado desconhecido em '{label}': {source}")
        return v


class RunConfig(_Section):
    """Configuração completa de uma execução"""

    seed: int = Field(0, ge=0)
    output_dir: str | None = None
    maps: MapsConfig = Field(default_factory=MapsConfig)
    sim: SimConfig = Field(default_factory=SimConfig)
    observation: ObservationConfig = Field(default_factory=ObservationConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    rewards: RewardParams = Field(default_factory=RewardParams)
    teacher_ppo: PpoConfig = Field(default_factory=PpoConfig)
    student_ppo: PpoConfig = Field(default_factory=PpoConfig)
    curriculum: PhaseConfig = Field(default_factory=PhaseConfig)
    baseline: RuleParams = Field(default_factory=RuleParams)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    def config_hash(self) -> str:
        """
        SHA-256 do dump canônico das seções que afetam o treino.
        `output_dir` e `evaluation` ficam de fora: mudar onde/como se avalia não invalida checkpoints.
        """
        payload = self.model_dump(mode="json", exclude={"output_dir", "evaluation"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(
        self,
        seed: int | None = None,
        recalibrate: bool | None = None,
        episodes: int | None = None,
        lambda_value: float | None = None,
        out: str | None = None,
    ) -> "RunConfig":
        """
        Aplica overrides de linha de comando e revalida a configuração inteira.

        Raises:
            pydantic.ValidationError: Valor de override inválido
        """
        data: dict[str, Any] = self.model_dump(mode="json")
        if seed is not None:
            data["seed"] = seed
        if recalibrate is not None:
            data["curriculum"]["recalibration_enabled"] = recalibrate
        if episodes is not None:
            data["evaluation"]["episodes"] = episodes
        if lambda_value is not None:
            data["evaluation"]["lambdas"] = [lambda_value]
        if out is not None:
            data["output_dir"] = out
        return RunConfig.model_validate(data)


def load_run_config(path: str | Path | None) -> RunConfig:
    """
    Carrega a configuração de execução de um arquivo YAML.

    Args:
        path: Caminho do YAML; None retorna a configuração padrão

    Raises:
        ConfigError: Arquivo ausente ou YAML malformado
        pydantic.ValidationError: Valores ou chaves inválidos
    """
    if path is None:
        return RunConfig()
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"Arquivo de configuração não encontrado: {file_path}")
    try:
        data = yaml.safe_load(file_path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML malformado em {file_path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"A raiz de {file_path} deve ser um mapeamento chave-valor")
    return RunConfig.model_validate(data)


def dump_run_config(config: RunConfig, path: str | Path) -> Path:
    """Grava a configuração completa (com padrões explícitos) em YAML"""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(
        yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False, allow_unicode=True),
        encoding="utf-8",
    )
    return file_path

# tests/conftest.py
"""
Fixtures compartilhadas para testes pytest do Curriculab.
Configuração reduzida (redes pequenas, poucos NPCs, episódios curtos) e diretórios
temporários: nenhum teste escreve em data/.
"""

import os
import tempfile

import numpy as np
import pytest

# Garantir que estamos em modo de teste antes de importar o app
_TMP_ROOT = tempfile.mkdtemp(prefix="curriculab-tests-")
os.environ["APP_ENV"] = "testing"
os.environ["LOG_TO_FILE"] = "false"
os.environ["DATA_DIR"] = _TMP_ROOT
os.environ["LOG_DIR"] = os.path.join(_TMP_ROOT, "logs")
os.environ["DEFAULT_OUTPUT_DIR"] = os.path.join(_TMP_ROOT, "runs")

from app.core.lane_graph import build_t_intersection, build_x_intersection, dilate  # noqa: E402
from app.models.agent import AgentState  # noqa: E402
from app.schemas.run_config import RunConfig  # noqa: E402

TINY_CONFIG = {
    "seed": 7,
    "maps": {"train_t": 1, "train_x": 1, "holdout_t": 1, "holdout_x": 1},
    "sim": {"npc_count": 2, "max_steps": 40},
    "observation": {"history_steps": 4, "student_neighbors": 3},
    "network": {"hidden": 8, "lambda_dim": 4, "map_layers": 1, "student_hidden": 16},
    "teacher_ppo": {"steps_per_iteration": 30, "minibatch_size": 16, "epochs": 1},
    "student_ppo": {"steps_per_iteration": 30, "minibatch_size": 16, "epochs": 1},
    "curriculum": {"n_teacher": 1, "n_student": 2, "n_recalibrate": 9, "total_rounds": 1},
    "evaluation": {
        "episodes": 2,
        "traffic": ["rule", "none"],
        "students": {"idle": "scripted:idle"},
        "lambdas": [0.0],
    },
}


@pytest.fixture
def tiny_config() -> RunConfig:
    """Configuração de execução em escala de teste"""
    return RunConfig.model_validate(TINY_CONFIG)


@pytest.fixture
def t_map():
    """Cruzamento em T com dilatação D=2"""
    return dilate(build_t_intersection(30.0, 3.5, 8.0, map_id="test-t"), 2)


@pytest.fixture
def x_map():
    """Cruzamento de quatro vias com dilatação D=2"""
    return dilate(build_x_intersection(30.0, 3.5, 8.0, map_id="test-x"), 2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def make_state():
    """Fábrica de AgentState com dimensões padrão do veículo"""

    def _make(x: float = 0.0, y: float = 0.0, heading: float = 0.0, speed: float = 0.0, **kwargs) -> AgentState:
        return AgentState(x=x, y=y, heading=heading, speed=speed, **kwargs)

    return _make


@pytest.fixture
def rigid():
    """
    Transformação rígida de um cenário (grafo, estados, rotas): rotação em torno da
    origem seguida de translação.
    """
    from app.models.lane import Route
    from app.utils.geometry import rotate, wrap_angle

    def _move(graph, states, routes, rotation: float, translation: tuple[float, float]):
        tx, ty = translation

        def point(x: float, y: float) -> tuple[float, float]:
            rx, ry = rotate(x, y, rotation)
            return rx + tx, ry + ty

        moved_states = []
        for s in states:
            x, y = point(s.x, s.y)
            vx, vy = rotate(s.vx, s.vy, rotation)
            ax, ay = rotate(s.ax, s.ay, rotation)
            moved_states.append(
                AgentState(
                    x=x,
                    y=y,
                    heading=wrap_angle(s.heading + rotation),
                    speed=s.speed,
                    vx=vx,
                    vy=vy,
                    ax=ax,
                    ay=ay,
                    half_length=s.half_length,
                    half_width=s.half_width,
                )
            )
        moved_routes = [
            Route(
                node_ids=r.node_ids,
                road_option=r.road_option,
                goal_position=point(*r.goal_position),
                goal_arc_length=r.goal_arc_length,
            )
            for r in routes
        ]
        return graph.transformed(rotation, translation), moved_states, moved_routes

    return _move

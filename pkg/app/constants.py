"""
Constantes do Curriculab.
Centraliza valores fixos usados em múltiplos módulos (simulação, observação, rede, currículo).
Valores configuráveis por execução ficam em app/schemas/run_config.py; aqui ficam apenas os padrões.
"""

import math

# === SIMULAÇÃO ===
DT_SECONDS = 0.1
MAX_STEPS = 300
WHEELBASE_M = 2.7
V_MAX = 8.0
VEHICLE_LENGTH_M = 4.8
VEHICLE_WIDTH_M = 2.2
GOAL_RADIUS_M = 2.0
GOAL_SETBACK_M = 2.5
SPAWN_MIN_GAP_M = 8.0
DEFAULT_NPC_COUNT = 8

# Grade discreta de ações 3x3 (aceleração x esterço)
ACCEL_LEVELS = (-3.0, 0.0, 2.0)
STEER_LEVELS = (-0.3, 0.0, 0.3)
ACCEL_BRAKE, ACCEL_IDLE, ACCEL_THROTTLE = 0, 1, 2
STEER_RIGHT, STEER_STRAIGHT, STEER_LEFT = 0, 1, 2
NUM_ACTIONS = len(ACCEL_LEVELS) * len(STEER_LEVELS)

# === MAPAS ===
SEGMENT_LENGTH_M = 5.0
DEFAULT_CORNER_RADIUS_M = 8.0
CONNECTOR_SAMPLES = 12
MAP_DOCUMENT_VERSION = 1

# === OBSERVAÇÃO ===
HISTORY_STEPS = 10
STUDENT_NEIGHBORS = 6
HISTORY_FEATURES = 5
NODE_FEATURES = 6
REL_POS_FEATURES = 5
ZERO_DISTANCE_EPS = 1e-6
STUDENT_OBS_DIM = 4 + 3 + STUDENT_NEIGHBORS * 4 + 2

# Escalas de normalização do vetor do estudante
GOAL_DISTANCE_SCALE = 50.0
NEIGHBOR_DISTANCE_SCALE = 30.0

# === REDE DO PROFESSOR ===
ATTENTION_RADIUS_M = 20.0
AGENT_RADIUS_M = 30.0

# === CURRÍCULO (valores padrão) ===
LAMBDA_SET = tuple(1.0 - 0.25 * i for i in range(9))
DILATION_POWER = 2
REWARD_EPSILON = 0.1
RBF_SIGMA = 5.0
N_TEACHER = 10
N_STUDENT = 10
N_RECALIBRATE = 100
T_SUCCESS = 0.75
T_FAIL = 0.25
P_OLD = 0.3

# Grade de λ da análise do professor
EVAL_LAMBDAS = (1.0, 0.5, 0.0, -0.5, -1.0)
DEFAULT_EVAL_EPISODES = 100

# === FORMATOS DE ARQUIVO ===
CHECKPOINT_FORMAT_VERSION = 1
SCENARIO_LOG_VERSION = 1
METRICS_COLUMNS = (
    "iteration",
    "round",
    "phase",
    "lambda",
    "episodes",
    "success_rate",
    "mean_return",
    "policy_loss",
    "value_loss",
    "entropy",
    "clip_fraction",
)
CURRICULUM_COLUMNS = (
    "round",
    "phase",
    "iteration",
    "lambda",
    "level_index",
    "replay",
    "episodes",
    "success_rate",
    "mean_return",
)

TWO_PI = 2.0 * math.pi

"""
Serviço de checkpoints: container .npz com parâmetros e momentos do Adam, mais um JSON
de metadados (versão, hash da configuração, posição do currículo).
"""

import os
from pathlib import Path

import numpy as np

from app.constants import CHECKPOINT_FORMAT_VERSION
from app.core.autodiff import Array
from app.core.errors import CheckpointError, ShapeError
from app.core.student_policy import StudentPolicy
from app.core.teacher_policy import TeacherPolicy
from app.schemas.checkpoint import CheckpointMeta
from app.schemas.run_config import RunConfig
from app.utils.logger import get_logger

logger = get_logger(__name__)

ARRAYS_FILE = "checkpoint.npz"
META_FILE = "checkpoint.json"


def save_checkpoint(directory: str | Path, arrays: dict[str, Array], meta: CheckpointMeta) -> Path:
    """
    Grava o checkpoint de forma atômica (arquivos temporários + rename).

    Returns:
        Diretório do checkpoint
    """
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    tmp_arrays = path / f".{ARRAYS_FILE}.tmp"
    tmp_meta = path / f".{META_FILE}.tmp"
    with open(tmp_arrays, "wb") as f:
        np.savez(f, **arrays)
    tmp_meta.write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    os.replace(tmp_arrays, path / ARRAYS_FILE)
    os.replace(tmp_meta, path / META_FILE)
    logger.info(f"Checkpoint saved: {path} ({meta.kind}, next round {meta.next_round}, phase {meta.next_phase})")
    return path


def has_checkpoint(directory: str | Path) -> bool:
    path = Path(directory)
    return (path / ARRAYS_FILE).is_file() and (path / META_FILE).is_file()


def load_checkpoint(directory: str | Path, expected_hash: str | None = None) -> tuple[dict[str, Array], CheckpointMeta]:
    """
    Carrega arrays e metadados.

    Args:
        expected_hash: Se informado, precisa coincidir com o hash gravado

    Raises:
        CheckpointError: Arquivos ausentes, versão incompatível ou hash divergente
    """
    path = Path(directory)
    if not has_checkpoint(path):
        raise CheckpointError(f"Checkpoint não encontrado em {path}")
    try:
        meta = CheckpointMeta.model_validate_json((path / META_FILE).read_text(encoding="utf-8"))
    except ValueError as e:
        raise CheckpointError(f"Metadados de checkpoint ilegíveis em {path}: {e}") from e
    if meta.version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"Versão de checkpoint não suportada: {meta.version}")
    if expected_hash is not None and meta.config_hash != expected_hash:
        raise CheckpointError(
            f"Checkpoint em {path} foi gerado com outra configuração "
            f"(hash {meta.config_hash[:12]}, atual {expected_hash[:12]})"
        )
    with np.load(path / ARRAYS_FILE, allow_pickle=False) as data:
        arrays = {key: data[key] for key in data.files}
    return arrays, meta


def load_teacher(directory: str | Path, config: RunConfig) -> TeacherPolicy:
    """
    Professor salvo em qualquer checkpoint que o contenha.

    Raises:
        CheckpointError: Checkpoint sem professor ou com formas incompatíveis
    """
    arrays, meta = load_checkpoint(directory)
    if "teacher" not in meta.components:
        raise CheckpointError(f"Checkpoint em {directory} não contém professor")
    teacher = TeacherPolicy(config.network, seed=0)
    try:
        teacher.load_arrays(arrays)
    except ShapeError as e:
        raise CheckpointError(f"Professor incompatível com a seção network: {e}") from e
    return teacher


def load_student(directory: str | Path, config: RunConfig) -> StudentPolicy:
    """
    Estudante salvo em qualquer checkpoint que o contenha.

    Raises:
        CheckpointError: Checkpoint sem estudante ou com formas incompatíveis
    """
    arrays, meta = load_checkpoint(directory)
    if "student" not in meta.components:
        raise CheckpointError(f"Checkpoint em {directory} não contém estudante")
    student = StudentPolicy(config.observation.student_dim, config.network.student_hidden, seed=0)
    try:
        student.load_arrays(arrays)
    except ShapeError as e:
        raise CheckpointError(f"Estudante incompatível com a configuração: {e}") from e
    return student

"""
Exportação de CSVs para gráficos externos: perfis de velocidade do estudante e
trajetória do currículo.
"""

import csv
from collections import defaultdict
from pathlib import Path

from pydantic import ValidationError

from app.core.errors import DataError
from app.schemas.report import EpisodeRecord
from app.services.evaluation_service import EPISODES_FILE
from app.utils.logger import get_logger

logger = get_logger(__name__)

PROFILES_FILE = "velocity_profiles.csv"
MEAN_PROFILES_FILE = "velocity_mean_profiles.csv"
CURRICULUM_LOG_FILE = "curriculum_log.csv"
CURRICULUM_TRACE_FILE = "curriculum_trace.csv"


def read_episodes(path: str | Path) -> list[EpisodeRecord]:
    """
    Lê episodes.jsonl.

    Raises:
        DataError: Arquivo ausente, inválido ou sem episódios
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise DataError(f"Arquivo de episódios não encontrado: {file_path}")
    try:
        records = [
            EpisodeRecord.model_validate_json(line)
            for line in file_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    except ValidationError as e:
        raise DataError(f"Linha inválida em {file_path}: {e}") from e
    if not records:
        raise DataError(f"Nenhum episódio em {file_path}")
    return records


def velocity_profiles(records: list[EpisodeRecord]) -> list[tuple[str, int, int, float]]:
    """
    Série de velocidade do estudante por episódio.

    Returns:
        Linhas (célula, episódio, t, velocidade) com t de 1 ao número de passos

    Raises:
        DataError: Nenhum episódio
    """
    if not records:
        raise DataError("Nenhum episódio para extrair perfis de velocidade")
    rows = []
    for record in records:
        for t, speed in enumerate(record.speeds, start=1):
            rows.append((record.cell, record.episode, t, speed))
    return rows


def mean_profiles(records: list[EpisodeRecord]) -> list[tuple[str, int, float, int]]:
    """
    Perfil médio por célula.

    Returns:
        Linhas (célula, t, velocidade média, episódios ainda ativos em t)
    """
    if not records:
        raise DataError("Nenhum episódio para extrair perfis de velocidade")
    by_cell: dict[str, list[list[float]]] = defaultdict(list)
    for record in records:
        by_cell[record.cell].append(record.speeds)
    rows = []
    for cell, series in by_cell.items():
        horizon = max((len(s) for s in series), default=0)
        for t in range(horizon):
            active = [s[t] for s in series if len(s) > t]
            rows.append((cell, t + 1, sum(active) / len(active), len(active)))
    return rows


def curriculum_trace(path: str | Path) -> list[dict[str, str]]:
    """
    Trajetória de λ do currículo a partir de curriculum_log.csv.

    Raises:
        DataError: Log ausente ou vazio
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise DataError(f"Log do currículo não encontrado: {file_path}")
    with open(file_path, encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise DataError(f"Log do currículo vazio: {file_path}")
    trace = []
    for step, row in enumerate(rows, start=1):
        trace.append(
            {
                "step": str(step),
                "round": row["round"],
                "phase": row["phase"],
                "iteration": row["iteration"],
                "lambda": row["lambda"],
                "level_index": row["level_index"],
                "replay": row["replay"],
                "success_rate": row["success_rate"],
            }
        )
    return trace


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def export_plot_data(source_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """
    Gera os CSVs disponíveis a partir dos artefatos de uma execução.

    Args:
        source_dir: Diretório com episodes.jsonl e/ou curriculum_log.csv
        out_dir: Destino (padrão: o próprio source_dir)

    Raises:
        DataError: Nenhum artefato reconhecido em source_dir
    """
    source = Path(source_dir)
    target = Path(out_dir) if out_dir is not None else source
    target.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if (source / EPISODES_FILE).is_file():
        records = read_episodes(source / EPISODES_FILE)
        _write_csv(target / PROFILES_FILE, ["cell", "episode", "t", "speed"], velocity_profiles(records))
        _write_csv(target / MEAN_PROFILES_FILE, ["cell", "t", "mean_speed", "episodes"], mean_profiles(records))
        written += [target / PROFILES_FILE, target / MEAN_PROFILES_FILE]

    if (source / CURRICULUM_LOG_FILE).is_file():
        trace = curriculum_trace(source / CURRICULUM_LOG_FILE)
        with open(target / CURRICULUM_TRACE_FILE, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(trace[0]))
            writer.writeheader()
            writer.writerows(trace)
        written.append(target / CURRICULUM_TRACE_FILE)

    if not written:
        raise DataError(f"Nenhum {EPISODES_FILE} ou {CURRICULUM_LOG_FILE} em {source}")
    logger.info(f"Plot data written: {[p.name for p in written]}")
    return written

"""
Sistema de logging centralizado usando Loguru.
Logs técnicos em inglês; docstrings e mensagens de erro para o usuário em português.
"""

import contextlib
import sys
from pathlib import Path

from loguru import logger

_CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{extra[component]}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)
_FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {extra[component]}:{function}:{line} - {message}"

logger.configure(extra={"component": "curriculab"})


def setup_logger(
    log_level: str = "INFO",
    app_name: str = "Curriculab",
    log_dir: str | Path = "data/logs",
    to_file: bool = True,
) -> None:
    """
    Configura o logger da aplicação.

    Args:
        log_level: Nível de log (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        app_name: Nome da aplicação para o arquivo de log
        log_dir: Diretório dos arquivos de log rotacionados
        to_file: Se False, só o console é configurado (usado nos testes)
    """
    # Garantir encoding UTF-8 no stdout (consoles Windows em CP1252)
    if hasattr(sys.stdout, "reconfigure"):
        with contextlib.suppress(Exception):
            sys.stdout.reconfigure(encoding="utf-8", errors="replace")

    # Remove handlers padrão do loguru
    logger.remove()

    # Console em stderr: stdout fica livre para veredictos da CLI (ex.: "match")
    logger.add(sys.stderr, format=_CONSOLE_FORMAT, level=log_level, colorize=True)

    if to_file:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)

        # Treinos longos: um arquivo por dia
        logger.add(
            log_path / f"{app_name.lower()}_{{time:YYYY-MM-DD}}.log",
            format=_FILE_FORMAT,
            level=log_level,
            rotation="00:00",
            retention="30 days",
            compression="zip",
            encoding="utf-8",
        )

        logger.add(
            log_path / f"{app_name.lower()}_errors_{{time:YYYY-MM-DD}}.log",
            format=_FILE_FORMAT,
            level="ERROR",
            rotation="00:00",
            retention="90 days",
            compression="zip",
            encoding="utf-8",
            backtrace=True,
            diagnose=True,
        )

    logger.info(f"Logger initialized - Level: {log_level}, App: {app_name}, file sinks: {to_file}")


def get_logger(name: str | None = None):
    """
    Retorna uma instância do logger.

    Args:
        name: Nome do módulo/componente (opcional)

    Returns:
        Logger instance
    """
    if name:
        return logger.bind(component=name)
    return logger

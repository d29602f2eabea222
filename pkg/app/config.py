"""
Configuração de processo do Curriculab usando Pydantic Settings.
Carrega variáveis do arquivo .env e valida tipos.

A configuração de cada execução (mapas, PPO, currículo, recompensas) NÃO mora aqui:
ela vem do arquivo YAML validado por app/schemas/run_config.py.
"""

import os
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_LOG_LEVELS = {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}


class Settings(BaseSettings):
    """Configurações de processo do Curriculab"""

    # === APLICAÇÃO ===
    APP_NAME: str = "Curriculab"
    APP_ENV: str = Field(default="development", description="development, testing ou production")
    LOG_LEVEL: str = "INFO"
    LOG_TO_FILE: bool = Field(default=True, description="Grava logs rotacionados em LOG_DIR")

    # === DIRETÓRIOS ===
    DATA_DIR: str = "./data"
    LOG_DIR: str = "./data/logs"
    DEFAULT_OUTPUT_DIR: str = Field(default="./data/runs", description="Saída padrão quando --out não é informado")

    model_config = SettingsConfigDict(
        env_file=os.environ.get("CURRICULAB_ENV_FILE", ".env"),
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",  # Ignora variáveis extras no .env
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normaliza e valida o nível de log aceito pelo loguru"""
        level = v.strip().upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL inválido: {v}. Use um de {sorted(_LOG_LEVELS)}")
        return level

    @field_validator("APP_ENV")
    @classmethod
    def validate_app_env(cls, v: str) -> str:
        """Valida o ambiente de execução"""
        env = v.strip().lower()
        if env not in {"development", "testing", "production"}:
            raise ValueError(f"APP_ENV inválido: {v}")
        return env

    @property
    def data_path(self) -> Path:
        """Retorna o diretório base de dados"""
        return Path(self.DATA_DIR)

    @property
    def log_path(self) -> Path:
        """Retorna o diretório de logs"""
        return Path(self.LOG_DIR)

    @property
    def output_path(self) -> Path:
        """Retorna o diretório padrão de saída das execuções"""
        return Path(self.DEFAULT_OUTPUT_DIR)

    @property
    def file_logging_enabled(self) -> bool:
        """Em testes nunca gravamos arquivos de log"""
        return self.LOG_TO_FILE and self.APP_ENV != "testing"

    def ensure_directories(self) -> None:
        """Cria diretórios necessários se não existirem."""
        directories = [self.data_path, self.output_path]
        if self.file_logging_enabled:
            directories.append(self.log_path)

        for directory in directories:
            directory.mkdir(parents=True, exist_ok=True)


# Instância global de configuração
settings = Settings()

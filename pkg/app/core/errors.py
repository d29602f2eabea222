"""
Hierarquia de erros do Curriculab.
Subclasses de ValueError/RuntimeError para que chamadores genéricos continuem funcionando.
"""


class LabError(Exception):
    """Erro base de todos os componentes"""


class MapError(LabError, ValueError):
    """Dimensões inválidas, nós inexistentes ou rotas sem conector"""


class ShapeError(LabError, ValueError):
    """Formas incompatíveis em operações da engine diferenciável"""


class EpisodeError(LabError, RuntimeError):
    """Operação inválida sobre um episódio (ex.: avançar um episódio terminado)"""


class ConfigError(LabError, ValueError):
    """Arquivo de configuração malformado ou inconsistente"""


class CheckpointError(LabError):
    """Checkpoint ausente, versão incompatível ou hash de configuração divergente"""


class TrainingError(LabError, RuntimeError):
    """Atualização de PPO abortada (perda ou gradiente não finito)"""


class ReplayError(LabError):
    """Log de cenário ilegível ou inconsistente"""


class DataError(LabError, ValueError):
    """Artefato de dados ausente ou vazio (ex.: episodes.jsonl sem episódios)"""

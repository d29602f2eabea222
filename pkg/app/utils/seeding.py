"""
Fluxos de aleatoriedade nomeados a partir de uma única semente raiz.

Cada componente (mapa, spawn, amostragem de política, sorteio de λ) recebe o seu
próprio gerador, derivado de (semente raiz, nome do fluxo, índices). Assim um
componente pode variar sem perturbar os demais e uma execução retomada de
checkpoint reproduz exatamente a execução contínua.
"""

import hashlib

import numpy as np

STREAM_MAP = "map"
STREAM_SPAWN = "spawn"
STREAM_POLICY = "policy"
STREAM_LAMBDA = "lambda"
STREAM_INIT = "init"
STREAM_SHUFFLE = "shuffle"
STREAM_REPLAY = "lambda-replay"


def _stream_key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(root_seed: int, stream: str, *indices: int) -> int:
    """
    Deriva uma semente inteira determinística para um fluxo nomeado.

    Args:
        root_seed: Semente raiz da execução
        stream: Nome do fluxo (ex.: "spawn")
        indices: Índices adicionais (rodada, fase, iteração...)

    Returns:
        Semente de 63 bits
    """
    entropy = [int(root_seed) & 0xFFFFFFFFFFFFFFFF, _stream_key(stream), *(int(i) for i in indices)]
    seq = np.random.SeedSequence(entropy)
    return int(seq.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def stream_rng(root_seed: int, stream: str, *indices: int) -> np.random.Generator:
    """Gerador numpy para um fluxo nomeado"""
    return np.random.default_rng(derive_seed(root_seed, stream, *indices))

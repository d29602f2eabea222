"""
Blocos de rede sobre o motor de autodiff: camada densa, MLP de 2 camadas, convolução 1D
residual, GRU, passagem de mensagens por relação e cabeça ator-crítico categórica.

Convenção de nomes: cada bloco recebe um prefixo (`name`) e cria `name.w`, `name.b`, etc.
`init_*` cria os parâmetros no store; a função homônima executa o forward num tape.
"""

import numpy as np

from app.constants import NUM_ACTIONS, REL_POS_FEATURES
from app.core import autodiff as ad
from app.core.autodiff import ParameterStore, Tape, Tensor
from app.core.errors import ShapeError

ACTIVATIONS = ("relu", "tanh", "none")
CONV_KERNEL = 3


def _activate(x: Tensor, activation: str) -> Tensor:
    if activation == "relu":
        return ad.relu(x)
    if activation == "tanh":
        return ad.tanh(x)
    if activation == "none":
        return x
    raise ValueError(f"Ativação desconhecida: {activation}")


# === DENSA / MLP ===


def init_dense(store: ParameterStore, name: str, fan_in: int, fan_out: int) -> None:
    store.create(f"{name}.w", (fan_in, fan_out))
    store.create(f"{name}.b", (fan_out,), init="zeros")


def dense(tape: Tape, x: Tensor, name: str, activation: str = "none") -> Tensor:
    """
    Mapa afim + ativação.

    Raises:
        ShapeError: Última dimensão da entrada não bate com os pesos
    """
    w = tape.param(f"{name}.w")
    if x.shape[-1] != w.shape[0]:
        raise ShapeError(f"{name}: entrada com {x.shape[-1]} features, pesos esperam {w.shape[0]}")
    return _activate(ad.matmul(x, w) + tape.param(f"{name}.b"), activation)


def init_mlp(store: ParameterStore, name: str, fan_in: int, hidden: int, fan_out: int) -> None:
    init_dense(store, f"{name}.0", fan_in, hidden)
    init_dense(store, f"{name}.1", hidden, fan_out)


def mlp(tape: Tape, x: Tensor, name: str, final_activation: str = "none") -> Tensor:
    """MLP de 2 camadas: relu na oculta"""
    return dense(tape, dense(tape, x, f"{name}.0", "relu"), f"{name}.1", final_activation)


# === CONVOLUÇÃO 1D RESIDUAL ===


def init_conv1d_residual(store: ParameterStore, name: str, fan_in: int, fan_out: int) -> None:
    store.create(f"{name}.conv.w", (CONV_KERNEL, fan_in, fan_out))
    store.create(f"{name}.conv.b", (fan_out,), init="zeros")
    store.create(f"{name}.skip", (fan_in, fan_out))


def _shift_indices(length: int, offset: int, padding: str) -> tuple[np.ndarray, np.ndarray]:
    """Índices de x[t + offset] e a máscara de validade (zero padding)"""
    raw = np.arange(length) + offset
    clipped = np.clip(raw, 0, length - 1)
    if padding == "replicate":
        return clipped, np.ones(length)
    return clipped, ((raw >= 0) & (raw < length)).astype(np.float64)


def conv1d_residual(tape: Tape, history: Tensor, name: str, padding: str = "replicate") -> Tensor:
    """
    relu(conv_k3(x)) + x @ P, mantendo o comprimento temporal.

    Args:
        history: (..., H, F) com H >= 3
        padding: "replicate" (padrão: sequência constante gera saída constante) ou "zeros"

    Raises:
        ShapeError: H menor que o kernel ou F incompatível
    """
    if padding not in ("zeros", "replicate"):
        raise ValueError(f"Padding desconhecido: {padding}")
    length = history.shape[-2]
    if length < CONV_KERNEL:
        raise ShapeError(f"{name}: sequência de {length} passos menor que o kernel {CONV_KERNEL}")
    weight = tape.param(f"{name}.conv.w")
    if history.shape[-1] != weight.shape[1]:
        raise ShapeError(f"{name}: entrada com {history.shape[-1]} features, kernel espera {weight.shape[1]}")

    out = tape.param(f"{name}.conv.b")
    for k in range(CONV_KERNEL):
        indices, valid = _shift_indices(length, k - CONV_KERNEL // 2, padding)
        shifted = ad.take(history, indices, axis=-2) * valid[:, None]
        out = out + ad.matmul(shifted, ad.take(weight, k, axis=0))
    return ad.relu(out) + ad.matmul(history, tape.param(f"{name}.skip"))


# === GRU ===


def init_gru(store: ParameterStore, name: str, fan_in: int, hidden: int) -> None:
    store.create(f"{name}.w_ih", (fan_in, 3 * hidden))
    store.create(f"{name}.w_hh", (hidden, 3 * hidden))
    store.create(f"{name}.b_ih", (3 * hidden,), init="zeros")
    store.create(f"{name}.b_hh", (3 * hidden,), init="zeros")


def gru_cell(tape: Tape, x: Tensor, h: Tensor, name: str) -> Tensor:
    """
    Uma aplicação da célula GRU (gates na ordem reset, update, candidato):
    r = σ(x W_ir + b_ir + h W_hr + b_hr); z = σ(...); n = tanh(x W_in + b_in + r ⊙ (h W_hn + b_hn));
    h' = (1 - z) ⊙ n + z ⊙ h
    """
    hidden = h.shape[-1]
    gi = ad.matmul(x, tape.param(f"{name}.w_ih")) + tape.param(f"{name}.b_ih")
    gh = ad.matmul(h, tape.param(f"{name}.w_hh")) + tape.param(f"{name}.b_hh")
    r_idx, z_idx, n_idx = (np.arange(k * hidden, (k + 1) * hidden) for k in range(3))
    r = ad.sigmoid(ad.take(gi, r_idx, axis=-1) + ad.take(gh, r_idx, axis=-1))
    z = ad.sigmoid(ad.take(gi, z_idx, axis=-1) + ad.take(gh, z_idx, axis=-1))
    n = ad.tanh(ad.take(gi, n_idx, axis=-1) + r * ad.take(gh, n_idx, axis=-1))
    return (1.0 - z) * n + z * h


def gru_aggregate(tape: Tape, sequence: Tensor, name: str) -> Tensor:
    """
    Recorrência GRU a partir de estado zero; retorna o estado final.

    Args:
        sequence: (..., H, F), H >= 1
    """
    length = sequence.shape[-2]
    if length < 1:
        raise ShapeError(f"{name}: sequência vazia")
    hidden = tape.store[f"{name}.w_hh"].shape[0]
    h = tape.constant(np.zeros((*sequence.shape[:-2], hidden)))
    for t in range(length):
        h = gru_cell(tape, ad.take(sequence, t, axis=-2), h, name)
    return h


# === PASSAGEM DE MENSAGENS ===


def init_message_pass(store: ParameterStore, name: str, src_dim: int, dst_dim: int, hidden: int) -> None:
    init_mlp(store, f"{name}.msg", src_dim + REL_POS_FEATURES, hidden, dst_dim)
    init_mlp(store, f"{name}.combine", 2 * dst_dim, hidden, dst_dim)
    store.create(f"{name}.value", (dst_dim, dst_dim))


def message_pass(
    tape: Tape,
    dst: Tensor,
    src: Tensor,
    src_idx: np.ndarray,
    dst_idx: np.ndarray,
    edge_encodings: np.ndarray,
    name: str,
) -> Tensor:
    """
    Atualização de uma relação:

        m = mean_in(MLP_m(h_src ⊕ enc))
        h_dst' = h_dst + σ(MLP_c(h_dst ⊕ m)) ⊙ (m @ W_v)

    O MLP de combinação decide, a partir do destino e da mensagem, quanto da mensagem
    entra no resíduo; mensagem nula não altera o destino. Nós sem arestas de entrada
    mantêm o embedding.

    Args:
        dst: Embeddings de destino (N, d_dst)
        src: Embeddings de origem (M, d_src); igual a dst em relações mapa-mapa
        src_idx, dst_idx: Linhas de origem/destino de cada aresta
        edge_encodings: (E, 5) codificação relativa de cada aresta
    """
    src_idx = np.asarray(src_idx, dtype=int)
    dst_idx = np.asarray(dst_idx, dtype=int)
    if len(src_idx) != len(dst_idx) or len(src_idx) != len(edge_encodings):
        raise ShapeError(f"{name}: listas de arestas com tamanhos diferentes")
    if len(src_idx) == 0:
        return dst
    if src_idx.max() >= src.shape[0] or dst_idx.max() >= dst.shape[0] or min(src_idx.min(), dst_idx.min()) < 0:
        raise ShapeError(f"{name}: aresta referencia nó inexistente")

    inputs = ad.concat([ad.take(src, src_idx, axis=0), tape.constant(edge_encodings)], axis=-1)
    messages = mlp(tape, inputs, f"{name}.msg")
    aggregated = ad.segment_mean(messages, dst_idx, dst.shape[0])
    gate = ad.sigmoid(mlp(tape, ad.concat([dst, aggregated], axis=-1), f"{name}.combine"))
    update = gate * ad.matmul(aggregated, tape.param(f"{name}.value"))
    has_incoming = (np.bincount(dst_idx, minlength=dst.shape[0]) > 0).astype(np.float64)[:, None]
    return dst + update * has_incoming


# === CABEÇA ATOR-CRÍTICO ===


def init_categorical_head(store: ParameterStore, name: str, fan_in: int, hidden: int) -> None:
    init_mlp(store, f"{name}.actor", fan_in, hidden, NUM_ACTIONS)
    init_mlp(store, f"{name}.critic", fan_in, hidden, 1)


def categorical_head(tape: Tape, embedding: Tensor, name: str) -> tuple[Tensor, Tensor]:
    """
    Returns:
        (log-probabilidades (..., 9), valor (...))
    """
    log_probs = ad.log_softmax(mlp(tape, embedding, f"{name}.actor"))
    value = mlp(tape, embedding, f"{name}.critic")
    return log_probs, ad.reshape(value, value.shape[:-1])

"""
Motor mínimo de diferenciação reversa sobre arrays numpy (float64).

- `ParameterStore`: arrays nomeados com formato fixo, inicialização semeada e serialização exata.
- `Tape`: registra as operações de um forward; `backward` percorre os nós em ordem reversa,
  visitando cada nó uma única vez, e devolve gradientes indexados pelo nome do parâmetro.
- `Tape(grad_enabled=False)` é o modo de inferência: nada é registrado.
"""

import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from app.core.errors import ShapeError

Array = np.ndarray
BackwardFn = Callable[[Array], tuple[Array | None, ...]]


class ParameterStore:
    """
    Parâmetros nomeados de uma rede.

    `version` é incrementado a cada atualização; caches derivados dos parâmetros
    (embeddings de mapa) usam esse contador como parte da chave.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.version = 0
        self._params: dict[str, Array] = {}
        self._rng = np.random.default_rng(self.seed)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Array:
        return self._params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> list[tuple[str, Array]]:
        return list(self._params.items())

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self._params.values()))

    def create(self, name: str, shape: tuple[int, ...], init: str = "glorot") -> Array:
        """
        Cria um parâmetro.

        Args:
            name: Nome único
            shape: Formato (imutável depois de criado)
            init: "glorot" (uniforme ±sqrt(6/(fan_in+fan_out))) ou "zeros"
        """
        if name in self._params:
            raise ValueError(f"Parâmetro duplicado: {name}")
        if init == "zeros":
            value = np.zeros(shape)
        elif init == "glorot":
            fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else shape[0]
            fan_out = shape[-1]
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            value = self._rng.uniform(-limit, limit, size=shape)
        else:
            raise ValueError(f"Inicialização desconhecida: {init}")
        self._params[name] = value.astype(np.float64)
        return self._params[name]

    def assign(self, name: str, value: Array) -> None:
        """Substitui o valor de um parâmetro existente (mesmo formato)"""
        current = self._params[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != current.shape:
            raise ShapeError(f"Formato de {name} é {current.shape}, recebido {value.shape}")
        self._params[name] = value.copy()
        self.version += 1

    def apply(self, updates: dict[str, Array]) -> None:
        """Soma deltas aos parâmetros e incrementa a versão uma vez"""
        for name, delta in updates.items():
            self._params[name] = self._params[name] + delta
        self.version += 1

    def snapshot(self) -> dict[str, Array]:
        return {name: value.copy() for name, value in self._params.items()}

    def restore(self, snapshot: dict[str, Array]) -> None:
        for name, value in snapshot.items():
            self._params[name] = value.copy()
        self.version += 1

    def to_arrays(self, prefix: str) -> dict[str, Array]:
        """Arrays para o container de checkpoint"""
        arrays = {f"{prefix}/param/{name}": value for name, value in self._params.items()}
        arrays[f"{prefix}/seed"] = np.array(self.seed, dtype=np.int64)
        arrays[f"{prefix}/version"] = np.array(self.version, dtype=np.int64)
        return arrays

    def load_arrays(self, arrays: dict[str, Array], prefix: str) -> None:
        """
        Carrega valores salvos por `to_arrays`. Os nomes e formatos precisam coincidir.

        Raises:
            ShapeError: Conjunto de nomes ou formatos diferente
        """
        key_prefix = f"{prefix}/param/"
        saved = {key.removeprefix(key_prefix): value for key, value in arrays.items() if key.startswith(key_prefix)}
        if set(saved) != set(self._params):
            missing = sorted(set(self._params) ^ set(saved))
            raise ShapeError(f"Parâmetros do checkpoint não coincidem com a rede: {missing[:5]}")
        for name, value in saved.items():
            if value.shape != self._params[name].shape:
                raise ShapeError(f"Formato de {name} no checkpoint é {value.shape}, esperado {self._params[name].shape}")
            self._params[name] = np.array(value, dtype=np.float64)
        self.version = int(arrays[f"{prefix}/version"])


@dataclass
class _Node:
    parents: tuple[int, ...]
    backward: BackwardFn | None = None
    name: str | None = None


class Tensor:
    """Valor de um nó; `node` é -1 quando o valor não exige gradiente"""

    __slots__ = ("value", "tape", "node")

    def __init__(self, value: Array, tape: "Tape", node: int = -1):
        self.value = value
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def requires_grad(self) -> bool:
        return self.node >= 0

    def __add__(self, other) -> "Tensor":
        return add(self, other)

    def __radd__(self, other) -> "Tensor":
        return add(other, self)

    def __sub__(self, other) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other) -> "Tensor":
        return mul(other, self)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, node={self.node})"


@dataclass
class Tape:
    """Registro de um forward para diferenciação reversa"""

    store: ParameterStore | None = None
    grad_enabled: bool = True
    nodes: list[_Node] = field(default_factory=list)
    memo: dict = field(default_factory=dict)
    _leaves: dict[str, Tensor] = field(default_factory=dict)

    def constant(self, value) -> Tensor:
        return Tensor(np.asarray(value, dtype=np.float64), self)

    def param(self, name: str) -> Tensor:
        """Folha de parâmetro; a mesma folha é reutilizada dentro do tape"""
        if self.store is None:
            raise ValueError("Tape sem ParameterStore")
        leaf = self._leaves.get(name)
        if leaf is None:
            value = self.store[name]
            if self.grad_enabled:
                self.nodes.append(_Node(parents=(), name=name))
                leaf = Tensor(value, self, len(self.nodes) - 1)
            else:
                leaf = Tensor(value, self)
            self._leaves[name] = leaf
        return leaf

    def record(self, value: Array, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
        if not self.grad_enabled or not any(p.requires_grad for p in parents):
            return Tensor(value, self)
        self.nodes.append(_Node(parents=tuple(p.node for p in parents), backward=backward))
        return Tensor(value, self, len(self.nodes) - 1)

    def backward(self, loss: Tensor) -> dict[str, Array]:
        """
        Propaga gradientes a partir de um escalar.

        Returns:
            Gradiente de cada parâmetro do store (zeros para os não usados)
        """
        if loss.value.size != 1:
            raise ShapeError(f"backward exige escalar, recebido formato {loss.shape}")
        grads_by_name: dict[str, Array] = {}
        if self.store is not None:
            grads_by_name = {name: np.zeros_like(value) for name, value in self.store.items()}
        if not loss.requires_grad:
            return grads_by_name

        grads: list[Array | None] = [None] * len(self.nodes)
        grads[loss.node] = np.ones_like(loss.value)
        for index in range(loss.node, -1, -1):
            grad = grads[index]
            if grad is None:
                continue
            grads[index] = None
            node = self.nodes[index]
            if node.name is not None:
                grads_by_name[node.name] = grads_by_name[node.name] + grad
            if node.backward is None:
                continue
            for parent, parent_grad in zip(node.parents, node.backward(grad), strict=True):
                if parent < 0 or parent_grad is None:
                    continue
                grads[parent] = parent_grad if grads[parent] is None else grads[parent] + parent_grad
        return grads_by_name


# === OPERAÇÕES ===


def _lift(ref: Tensor, value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return ref.tape.constant(value)


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, _lift(a, b)
    return _lift(b, a), b


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Soma o gradiente nos eixos que foram expandidos por broadcasting"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    return a.tape.record(
        a.value + b.value,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    return a.tape.record(
        a.value - b.value,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    return a.tape.record(
        a.value * b.value,
        (a, b),
        lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)),
    )


def matmul(x: Tensor, w) -> Tensor:
    """x (..., n) @ w (n, m) -> (..., m)"""
    x, w = _pair(x, w)
    if w.value.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ShapeError(f"matmul incompatível: {x.shape} @ {w.shape}")

    def backward(g: Array) -> tuple[Array, Array]:
        grad_x = g @ w.value.T
        grad_w = x.value.reshape(-1, x.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return grad_x, grad_w

    return x.tape.record(x.value @ w.value, (x, w), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0.0
    return a.tape.record(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.value)
    return a.tape.record(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * a.value))
    return a.tape.record(out, (a,), lambda g: (g * out * (1.0 - out),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.value)
    return a.tape.record(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return a.tape.record(np.log(a.value), (a,), lambda g: (g / a.value,))


def square(a: Tensor) -> Tensor:
    return a.tape.record(a.value * a.value, (a,), lambda g: (2.0 * g * a.value,))


def clip(a: Tensor, low: float, high: float) -> Tensor:
    """Saturação; gradiente zero fora de [low, high]"""
    inside = (a.value >= low) & (a.value <= high)
    return a.tape.record(np.clip(a.value, low, high), (a,), lambda g: (g * inside,))


def minimum(a, b) -> Tensor:
    """Mínimo elemento a elemento; em empate o gradiente vai para `a`"""
    a, b = _pair(a, b)
    take_a = a.value <= b.value
    return a.tape.record(
        np.where(take_a, a.value, b.value),
        (a, b),
        lambda g: (_unbroadcast(g * take_a, a.shape), _unbroadcast(g * ~take_a, b.shape)),
    )


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    original = a.shape
    return a.tape.record(a.value.reshape(shape), (a,), lambda g: (g.reshape(original),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("concat de lista vazia")
    ref = next((t for t in tensors if isinstance(t, Tensor)), None)
    parts = [_lift(ref, t) for t in tensors]
    axis = axis % parts[0].value.ndim
    sizes = [p.shape[axis] for p in parts]
    try:
        value = np.concatenate([p.value for p in parts], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat incompatível: {[p.shape for p in parts]}") from e
    bounds = np.cumsum(sizes)[:-1]

    def backward(g: Array) -> tuple[Array, ...]:
        return tuple(np.split(g, bounds, axis=axis))

    return ref.tape.record(value, parts, backward)


def take(a: Tensor, indices, axis: int = 0) -> Tensor:
    """Seleção por índices (inteiro ou array) ao longo de um eixo; índices podem repetir"""
    axis = axis % a.value.ndim
    indices = np.asarray(indices) if not isinstance(indices, int) else indices
    shape = a.shape

    def backward(g: Array) -> tuple[Array]:
        full = np.zeros(shape)
        moved = np.moveaxis(full, axis, 0)
        grad = np.moveaxis(g, axis, 0) if not isinstance(indices, int) else g
        np.add.at(moved, indices, grad)
        return (full,)

    return a.tape.record(np.take(a.value, indices, axis=axis), (a,), backward)


def segment_mean(values: Tensor, segment_ids: Array, num_segments: int) -> Tensor:
    """
    Média por segmento ao longo do eixo 0: (E, d) -> (S, d).
    Segmentos sem elementos resultam em zero.
    """
    segment_ids = np.asarray(segment_ids, dtype=int)
    counts = np.bincount(segment_ids, minlength=num_segments).astype(np.float64)
    safe = np.maximum(counts, 1.0)
    sums = np.zeros((num_segments, *values.shape[1:]))
    np.add.at(sums, segment_ids, values.value)
    scale = (1.0 / safe).reshape(-1, *([1] * (values.value.ndim - 1)))
    return values.tape.record(sums * scale, (values,), lambda g: ((g * scale)[segment_ids],))


def sum_(a: Tensor, axis: int | None = None) -> Tensor:
    shape = a.shape

    def backward(g: Array) -> tuple[Array]:
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return a.tape.record(np.sum(a.value, axis=axis), (a,), backward)


def mean(a: Tensor, axis: int | None = None) -> Tensor:
    count = a.value.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis), 1.0 / count)


def log_softmax(a: Tensor) -> Tensor:
    """log-softmax no último eixo"""
    shifted = a.value - a.value.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    probs = np.exp(out)
    return a.tape.record(out, (a,), lambda g: (g - probs * g.sum(axis=-1, keepdims=True),))

"""
Otimizador Adam e recorte global da norma do gradiente.
"""

import math

import numpy as np

from app.core.autodiff import Array, ParameterStore


def global_norm(grads: dict[str, Array]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_grad_norm(grads: dict[str, Array], max_norm: float) -> tuple[dict[str, Array], float]:
    """
    Reescala os gradientes para norma global <= max_norm.

    Returns:
        (gradientes recortados, norma antes do recorte)
    """
    norm = global_norm(grads)
    if not math.isfinite(norm) or norm <= max_norm:
        return grads, norm
    scale = max_norm / (norm + 1e-12)
    return {name: g * scale for name, g in grads.items()}, norm


class Adam:
    """Adam com correção de viés; momentos vivem no mesmo checkpoint dos parâmetros"""

    def __init__(
        self,
        store: ParameterStore,
        learning_rate: float = 3e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.store = store
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {name: np.zeros_like(value) for name, value in store.items()}
        self.v = {name: np.zeros_like(value) for name, value in store.items()}

    def step(self, grads: dict[str, Array]) -> None:
        """Aplica um passo de descida com os gradientes dados"""
        self.step_count += 1
        bias1 = 1.0 - self.beta1**self.step_count
        bias2 = 1.0 - self.beta2**self.step_count
        updates = {}
        for name, grad in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad * grad
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            updates[name] = -self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        self.store.apply(updates)

    def snapshot(self) -> tuple[int, dict[str, Array], dict[str, Array]]:
        return self.step_count, {k: v.copy() for k, v in self.m.items()}, {k: v.copy() for k, v in self.v.items()}

    def restore(self, snapshot: tuple[int, dict[str, Array], dict[str, Array]]) -> None:
        self.step_count, m, v = snapshot
        self.m = {k: val.copy() for k, val in m.items()}
        self.v = {k: val.copy() for k, val in v.items()}

    def to_arrays(self, prefix: str) -> dict[str, Array]:
        arrays = {f"{prefix}/adam_m/{k}": v for k, v in self.m.items()}
        arrays.update({f"{prefix}/adam_v/{k}": v for k, v in self.v.items()})
        arrays[f"{prefix}/adam_step"] = np.array(self.step_count, dtype=np.int64)
        return arrays

    def load_arrays(self, arrays: dict[str, Array], prefix: str) -> None:
        self.step_count = int(arrays[f"{prefix}/adam_step"])
        self.m = {k: np.array(arrays[f"{prefix}/adam_m/{k}"], dtype=np.float64) for k in self.m}
        self.v = {k: np.array(arrays[f"{prefix}/adam_v/{k}"], dtype=np.float64) for k in self.v}

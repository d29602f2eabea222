"""
Política do estudante: MLP sobre o vetor de observação local com a mesma cabeça categórica.
"""

import numpy as np

from app.core.autodiff import Array, ParameterStore, Tape, Tensor
from app.core.nn import categorical_head, dense, init_categorical_head, init_dense


class StudentPolicy:
    """Ator-crítico do estudante (sem acesso a λ)"""

    def __init__(self, obs_dim: int, hidden: int = 64, seed: int = 0):
        self.obs_dim = obs_dim
        self.hidden = hidden
        self.store = ParameterStore(seed)
        init_dense(self.store, "student.trunk", obs_dim, hidden)
        init_categorical_head(self.store, "student.head", hidden, hidden)

    def new_tape(self, grad_enabled: bool = True) -> Tape:
        return Tape(store=self.store, grad_enabled=grad_enabled)

    def evaluate(self, tape: Tape, observations: Array) -> tuple[Tensor, Tensor]:
        """
        Args:
            observations: (B, obs_dim)

        Returns:
            (log-probabilidades (B, 9), valores (B,))
        """
        trunk = dense(tape, tape.constant(np.atleast_2d(observations)), "student.trunk", "relu")
        return categorical_head(tape, trunk, "student.head")

    def infer(self, observation: Array) -> tuple[Array, float]:
        log_probs, values = self.evaluate(self.new_tape(grad_enabled=False), observation)
        return log_probs.value[0], float(values.value[0])

    def to_arrays(self, prefix: str = "student") -> dict[str, Array]:
        return self.store.to_arrays(prefix)

    def load_arrays(self, arrays: dict[str, Array], prefix: str = "student") -> None:
        self.store.load_arrays(arrays, prefix)

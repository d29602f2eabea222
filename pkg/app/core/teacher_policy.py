"""
Rede do professor: codifica históricos dos agentes e o grafo de faixas, funde as interações
em quatro camadas de passagem de mensagens (agente→mapa, mapa→mapa, mapa→agente,
agente→agente), funde λ e emite política e valor para cada NPC num único forward.
"""

from dataclasses import dataclass

import numpy as np

from app.constants import HISTORY_FEATURES, NODE_FEATURES, NUM_ACTIONS
from app.core import autodiff as ad
from app.core.autodiff import Array, ParameterStore, Tape, Tensor
from app.core.nn import (
    categorical_head,
    conv1d_residual,
    dense,
    gru_aggregate,
    init_categorical_head,
    init_conv1d_residual,
    init_dense,
    init_gru,
    init_message_pass,
    init_mlp,
    message_pass,
    mlp,
)
from app.core.observation import TeacherObservation, encode_pairs
from app.models.lane import ROAD_OPTION_ORDER, LaneGraph, Relation
from app.schemas.run_config import NetworkConfig
from app.utils.logger import get_logger

logger = get_logger(__name__)

MAP_RELATIONS = (Relation.PREDECESSOR, Relation.SUCCESSOR, Relation.LEFT_NEIGHBOR, Relation.RIGHT_NEIGHBOR)


@dataclass
class SceneEmbedding:
    """Embeddings finais de agentes e nós do mapa"""

    agents: Tensor  # (A, 2h)
    map_nodes: Tensor  # (M, h)
    is_student: tuple[bool, ...]
    cached_map: bool


@dataclass
class TeacherOutput:
    """Política e valor por NPC, na ordem de `npc_ids`"""

    npc_ids: list[int]
    log_probs: Tensor  # (N, 9)
    values: Tensor  # (N,)

    @property
    def probabilities(self) -> Array:
        return np.exp(self.log_probs.value)


def _radius_pairs(src_xy: Array, dst_xy: Array, radius: float, exclude_self: bool = False) -> tuple[Array, Array]:
    """Pares (src, dst) com distância <= radius"""
    if len(src_xy) == 0 or len(dst_xy) == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    dist = np.linalg.norm(src_xy[:, None, :] - dst_xy[None, :, :], axis=-1)
    within = dist <= radius
    if exclude_self:
        np.fill_diagonal(within, False)
    src, dst = np.nonzero(within)
    return src, dst


class TeacherPolicy:
    """Rede ator-crítico compartilhada por todos os NPCs"""

    def __init__(self, config: NetworkConfig, seed: int = 0):
        self.config = config
        self.store = ParameterStore(seed)
        self._map_cache: dict[tuple[str, int, int], Array] = {}
        self.cache_hits = 0
        self._build()

    @property
    def agent_dim(self) -> int:
        return 2 * self.config.hidden

    def _build(self) -> None:
        h, agent_dim, lam_dim = self.config.hidden, self.agent_dim, self.config.lambda_dim
        s = self.store
        init_mlp(s, "map.node", NODE_FEATURES, h, h)
        for layer in range(self.config.map_layers):
            for relation in MAP_RELATIONS:
                init_message_pass(s, f"map.hmp{layer}.{relation.value}", h, h, h)
        init_conv1d_residual(s, "agent.conv", HISTORY_FEATURES, h)
        init_gru(s, "agent.gru", h, h)
        init_mlp(s, "agent.option", len(ROAD_OPTION_ORDER), h, h)
        init_message_pass(s, "fuse.a2m", agent_dim, h, h)
        for relation in MAP_RELATIONS:
            init_message_pass(s, f"fuse.m2m.{relation.value}", h, h, h)
        init_message_pass(s, "fuse.m2a", h, agent_dim, h)
        init_message_pass(s, "fuse.a2a", agent_dim, agent_dim, h)
        init_dense(s, "lambda.proj", 1, lam_dim)
        init_mlp(s, "fusion", agent_dim + lam_dim, h, h)
        init_categorical_head(s, "head", h + lam_dim, h)
        logger.debug(f"Teacher network built: {s.num_parameters} parameters")

    def new_tape(self, grad_enabled: bool = True) -> Tape:
        return Tape(store=self.store, grad_enabled=grad_enabled)

    def invalidate_cache(self) -> None:
        self._map_cache.clear()

    # === CODIFICADORES ===

    def _map_relations(self, tape: Tape, emb: Tensor, graph: LaneGraph, poses: Array, prefix: str) -> Tensor:
        for relation in MAP_RELATIONS:
            src, dst = graph.edge_index(relation)
            enc = encode_pairs(poses[src], poses[dst])
            emb = message_pass(tape, emb, emb, src, dst, enc, f"{prefix}.{relation.value}")
        return emb

    def encode_map(self, tape: Tape, graph: LaneGraph) -> tuple[Tensor, bool]:
        """
        Embeddings dos nós do mapa, calculados uma vez por cenário.

        Em tapes de inferência o cache é por (map_id, versão dos parâmetros); em tapes
        com gradiente, por tape.

        Returns:
            (embeddings (M, h), se foi acerto de cache)
        """
        if tape.grad_enabled:
            key = ("map", graph.map_id, len(graph.nodes))
            cached = tape.memo.get(key)
            if cached is not None:
                self.cache_hits += 1
                return cached, True
        else:
            cache_key = (graph.map_id, len(graph.nodes), self.store.version)
            cached_value = self._map_cache.get(cache_key)
            if cached_value is not None:
                self.cache_hits += 1
                return tape.constant(cached_value), True

        emb = mlp(tape, tape.constant(graph.node_features), "map.node")
        poses = graph.node_poses
        for layer in range(self.config.map_layers):
            emb = self._map_relations(tape, emb, graph, poses, f"map.hmp{layer}")

        if tape.grad_enabled:
            tape.memo[key] = emb
        else:
            if len(self._map_cache) > 32:
                self._map_cache.clear()
            self._map_cache[cache_key] = emb.value
        return emb, False

    def encode_agents(self, tape: Tape, obs: TeacherObservation) -> Tensor:
        """
        Embedding por agente: conv1d residual → GRU, concatenado ao embedding do road option.
        O estudante recebe o slot de road option zerado.
        """
        history = conv1d_residual(tape, tape.constant(obs.histories), "agent.conv")
        motion = gru_aggregate(tape, history, "agent.gru")
        one_hot = np.zeros((len(obs.agent_ids), len(ROAD_OPTION_ORDER)))
        for row, option in enumerate(obs.road_options):
            if option is not None:
                one_hot[row, ROAD_OPTION_ORDER.index(option)] = 1.0
        npc_mask = np.array([0.0 if flag else 1.0 for flag in obs.is_student])[:, None]
        option_emb = mlp(tape, tape.constant(one_hot), "agent.option") * npc_mask
        return ad.concat([motion, option_emb], axis=-1)

    def fuse_interactions(
        self,
        tape: Tape,
        agents: Tensor,
        map_nodes: Tensor,
        graph: LaneGraph,
        agent_poses: Array,
    ) -> tuple[Tensor, Tensor]:
        """
        Quatro camadas em ordem fixa: agente→mapa, mapa→mapa, mapa→agente, agente→agente.

        Returns:
            (embeddings de agentes, embeddings do mapa) atualizados
        """
        node_poses = graph.node_poses
        radius, agent_radius = self.config.attention_radius, self.config.agent_radius

        a_idx, m_idx = _radius_pairs(agent_poses[:, :2], node_poses[:, :2], radius)
        a2m_enc = encode_pairs(agent_poses[a_idx], node_poses[m_idx])
        map_nodes = message_pass(tape, map_nodes, agents, a_idx, m_idx, a2m_enc, "fuse.a2m")

        map_nodes = self._map_relations(tape, map_nodes, graph, node_poses, "fuse.m2m")

        m2a_enc = encode_pairs(node_poses[m_idx], agent_poses[a_idx])
        agents = message_pass(tape, agents, map_nodes, m_idx, a_idx, m2a_enc, "fuse.m2a")

        src, dst = _radius_pairs(agent_poses[:, :2], agent_poses[:, :2], agent_radius, exclude_self=True)
        a2a_enc = encode_pairs(agent_poses[src], agent_poses[dst])
        agents = message_pass(tape, agents, agents, src, dst, a2a_enc, "fuse.a2a")
        return agents, map_nodes

    def embed_scene(self, tape: Tape, obs: TeacherObservation) -> SceneEmbedding:
        map_nodes, hit = self.encode_map(tape, obs.lane_graph)
        agents = self.encode_agents(tape, obs)
        agents, map_nodes = self.fuse_interactions(tape, agents, map_nodes, obs.lane_graph, obs.poses)
        return SceneEmbedding(agents=agents, map_nodes=map_nodes, is_student=obs.is_student, cached_map=hit)

    # === FORWARD ===

    def forward(self, obs: TeacherObservation, tape: Tape | None = None) -> TeacherOutput:
        """
        Política e valor de cada NPC vivo. O embedding do estudante participa da fusão,
        mas não recebe cabeça.
        """
        tape = tape if tape is not None else self.new_tape(grad_enabled=False)
        rows = obs.npc_rows
        if not rows:
            return TeacherOutput(
                npc_ids=[],
                log_probs=tape.constant(np.zeros((0, NUM_ACTIONS))),
                values=tape.constant(np.zeros(0)),
            )
        scene = self.embed_scene(tape, obs)
        npcs = ad.take(scene.agents, np.array(rows), axis=0)
        lam_emb = dense(tape, tape.constant([[obs.lam]]), "lambda.proj")
        lam_tile = ad.take(lam_emb, np.zeros(len(rows), dtype=int), axis=0)
        fused = mlp(tape, ad.concat([npcs, lam_tile], axis=-1), "fusion", final_activation="relu")
        log_probs, values = categorical_head(tape, ad.concat([fused, lam_tile], axis=-1), "head")
        return TeacherOutput(npc_ids=obs.npc_ids, log_probs=log_probs, values=values)

    def evaluate(self, tape: Tape, batch: list[TeacherObservation]) -> tuple[Tensor, Tensor]:
        """Forward de várias observações num tape; linhas = NPCs concatenados na ordem do lote"""
        outputs = [self.forward(obs, tape) for obs in batch]
        outputs = [out for out in outputs if out.npc_ids]
        if not outputs:
            return tape.constant(np.zeros((0, NUM_ACTIONS))), tape.constant(np.zeros(0))
        if len(outputs) == 1:
            return outputs[0].log_probs, outputs[0].values
        return (
            ad.concat([out.log_probs for out in outputs], axis=0),
            ad.concat([out.values for out in outputs], axis=0),
        )

    def infer(self, obs: TeacherObservation) -> tuple[Array, Array]:
        """(log-probabilidades (N, 9), valores (N,)) sem registrar gradientes"""
        out = self.forward(obs)
        return out.log_probs.value, out.values.value

    def to_arrays(self, prefix: str = "teacher") -> dict[str, Array]:
        return self.store.to_arrays(prefix)

    def load_arrays(self, arrays: dict[str, Array], prefix: str = "teacher") -> None:
        self.store.load_arrays(arrays, prefix)
        self.invalidate_cache()

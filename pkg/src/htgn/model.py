"""The assembled temporal heterogeneous link-prediction network."""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn

from .attention import TemporalAttention
from .config import TrainConfig
from .decoder import RelationDecoderBank
from .graph_store import GraphStore, InputError
from .memory import (MemoryUpdater, MessageFunction, NodeMemoryState,
                     group_messages_by_node, raw_messages_batch)
from .time_encoding import TimeEncoder


class TemporalOrderError(Exception):
    """An embedding was requested for a time before the node's memory time."""


def _uniform_embedding(count: int, dim: int) -> nn.Embedding:
    emb = nn.Embedding(count, dim)
    bound = 1.0 / math.sqrt(dim)
    nn.init.uniform_(emb.weight, -bound, bound)
    return emb


class HTGN(nn.Module):
    """Memory-based encoder (static embeddings, relation embeddings, three
    calendar time encoders, message network, GRU updater, temporal graph
    attention) plus the per-relation decoder bank.

    Node memory lives outside the module as :class:`NodeMemoryState`; the
    module holds only learnable parameters.
    """

    def __init__(self, node_count: int, relation_count: int, cfg: TrainConfig,
                 start_time: int = 0, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.node_count = node_count
        self.relation_count = relation_count
        self.cfg = cfg
        self.start_time = start_time
        d, d_rel, d_time = cfg.embed_dim, cfg.relation_dim, cfg.time_dim
        self.static_embedding = _uniform_embedding(node_count, d)
        self.relation_embedding = _uniform_embedding(relation_count, d_rel)
        self.msg_time_encoder = TimeEncoder(d_time)
        self.src_time_encoder = TimeEncoder(d_time)
        self.ngh_time_encoder = TimeEncoder(d_time)
        raw_dim = 2 * d + d_rel + d_time
        self.message_fn = MessageFunction(raw_dim, cfg.message_dim)
        self.memory_updater = MemoryUpdater(cfg.message_dim, d)
        self.attention = TemporalAttention(d, d_time, d_rel, cfg.n_heads,
                                           dropout=cfg.dropout)
        self.decoder = RelationDecoderBank(relation_count, d, cfg.decoder_hidden_dim)
        self.w0 = nn.Parameter(torch.tensor(float(cfg.w0_init)))
        self.w1 = nn.Parameter(torch.tensor(float(cfg.w1_init)))
        self.to(dtype)
        self._dtype = dtype

    # ------------------------------------------------------------------ state

    def new_memory_state(self) -> NodeMemoryState:
        return NodeMemoryState(self.node_count, self.cfg.embed_dim,
                               start_time=self.start_time, dtype=self._dtype)

    def lookup_node(self, node: int) -> Tensor:
        if not 0 <= node < self.node_count:
            raise InputError(f"node id out of range: {node}")
        return self.static_embedding.weight[node]

    def lookup_relation(self, relation: int) -> Tensor:
        if not 0 <= relation < self.relation_count:
            raise InputError(f"relation id out of range: {relation}")
        return self.relation_embedding.weight[relation]

    # -------------------------------------------------------------- embeddings

    def initial_embedding(self, nodes: Tensor, memory: Tensor) -> Tensor:
        """Mix of memory and static embedding: w0 * m + w1 * sne."""
        return self.w0 * memory[nodes] + self.w1 * self.static_embedding(nodes)

    def temporal_embeddings(self, nodes: Tensor, times: Tensor,
                            store: GraphStore, memory: Tensor,
                            update_time: Tensor) -> Tensor:
        """Temporal embeddings for (node, time) pairs via one attention layer
        over each node's k most recent links at or before its memory time.

        Nodes with fewer than k neighbors get one all-zero padding row
        (isolated nodes attend over that row alone).
        """
        b = len(nodes)
        k = self.cfg.neighbor_count
        t_node = update_time[nodes]
        if bool((times < t_node).any()):
            raise TemporalOrderError("prediction time precedes a memory update time")

        per_sample = [store.recent_neighbors(int(n), int(t), k)
                      for n, t in zip(nodes.tolist(), t_node.tolist())]
        length = max(1, max(len(nb) + (1 if len(nb) < k else 0)
                            for nb in per_sample))
        nbr_idx = torch.zeros(b, length, dtype=torch.int64)
        nbr_rel = torch.zeros(b, length, dtype=torch.int64)
        nbr_ts = times.unsqueeze(1).expand(b, length).clone()
        real = torch.zeros(b, length, dtype=torch.bool)
        attend = torch.zeros(b, length, dtype=torch.bool)
        for i, nb in enumerate(per_sample):
            c = len(nb)
            if c:
                nbr_idx[i, :c] = torch.tensor([x[0] for x in nb])
                nbr_rel[i, :c] = torch.tensor([x[1] for x in nb])
                nbr_ts[i, :c] = torch.tensor([x[2] for x in nb])
            real[i, :c] = True
            attend[i, :c + (1 if c < k else 0)] = True

        z_nbr = self.initial_embedding(nbr_idx.reshape(-1), memory).view(b, length, -1)
        phi_nbr = self.ngh_time_encoder(times.unsqueeze(1) - nbr_ts)
        re_nbr = self.relation_embedding(nbr_rel)
        rows = torch.cat([z_nbr, phi_nbr, re_nbr], dim=2)
        rows = rows * real.unsqueeze(2).to(rows.dtype)  # padding rows stay zero

        z_self = self.initial_embedding(nodes, memory)
        query = torch.cat([z_self, self.src_time_encoder(times - t_node)], dim=1)
        return self.attention(query, rows, attend)

    # ------------------------------------------------------------ memory phase

    def memory_phase(self, sources: Tensor, destinations: Tensor,
                     relations: Tensor, timestamps: Tensor,
                     state: NodeMemoryState) -> tuple[Tensor, Tensor, Tensor]:
        """Turn a chronological link batch into messages and run the GRU per
        touched node. Returns (nodes, new memory rows, new update times); the
        rows carry gradient so the message network and GRU stay trainable, and
        callers detach them when committing to the state.
        """
        raw, owners, times = raw_messages_batch(
            sources, destinations, relations, timestamps,
            state.memory, state.update_time,
            self.relation_embedding.weight, self.msg_time_encoder)
        messages = self.message_fn(raw)
        nodes, padded, lengths, new_times = group_messages_by_node(
            owners, messages, times)
        new_rows = self.memory_updater.run_sequences(
            state.memory[nodes], padded, lengths)
        return nodes, new_rows, new_times

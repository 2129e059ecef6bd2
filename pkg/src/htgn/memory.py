"""Per-node memory: raw-message construction, the message network and the
GRU updater. Memory is state, not a parameter; it never receives gradients
and is reset at the start of every epoch.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor, nn

from .graph_store import TemporalLink
from .time_encoding import TimeEncoder


class StalenessError(Exception):
    """A link older than a node's memory update time reached the updater."""


class MessageOrderError(Exception):
    """Messages for one node arrived out of chronological order."""


class NodeMemoryState:
    """Memory matrix (node_count x mem_dim) plus per-node update times.

    Rows start at zero and update times at ``start_time``; both only move
    forward during a run. Tensors never require grad.
    """

    def __init__(self, node_count: int, mem_dim: int, start_time: int = 0,
                 dtype: torch.dtype = torch.float32):
        self.node_count = node_count
        self.mem_dim = mem_dim
        self.start_time = start_time
        self.memory = torch.zeros(node_count, mem_dim, dtype=dtype)
        self.update_time = torch.full((node_count,), start_time, dtype=torch.int64)

    def reset(self):
        self.memory.zero_()
        self.update_time.fill_(self.start_time)

    def clone(self) -> "NodeMemoryState":
        other = NodeMemoryState(self.node_count, self.mem_dim, self.start_time,
                                dtype=self.memory.dtype)
        other.memory = self.memory.clone()
        other.update_time = self.update_time.clone()
        return other

    def commit(self, nodes: Tensor, new_rows: Tensor, new_times: Tensor):
        """Store updated rows as plain data (gradients are cut here)."""
        self.memory[nodes] = new_rows.detach()
        self.update_time[nodes] = new_times


@dataclass(frozen=True)
class RawMessage:
    vector: Tensor  # (2*mem_dim + rel_dim + time_dim,)
    owner: int
    timestamp: int


def raw_messages(link: TemporalLink, state: NodeMemoryState,
                 relation_table: Tensor,
                 msg_time_encoder: TimeEncoder) -> tuple[RawMessage, RawMessage]:
    """Build the pair of raw messages for one link: for each endpoint, own
    memory, other memory, relation embedding and the encoded gap between the
    link time and the endpoint's memory update time, concatenated.
    """
    s, d, r, t = link
    t_s = int(state.update_time[s])
    t_d = int(state.update_time[d])
    if t < t_s or t < t_d:
        raise StalenessError(
            f"link at t={t} older than memory update times ({t_s}, {t_d})")
    m_s, m_d = state.memory[s], state.memory[d]
    re_r = relation_table[r]
    deltas = torch.tensor([t - t_s, t - t_d], dtype=torch.int64)
    te = msg_time_encoder(deltas)
    msg_s = torch.cat([m_s, m_d, re_r, te[0]])
    msg_d = torch.cat([m_d, m_s, re_r, te[1]])
    return RawMessage(msg_s, s, t), RawMessage(msg_d, d, t)


def raw_messages_batch(sources: Tensor, destinations: Tensor, relations: Tensor,
                       timestamps: Tensor, memory: Tensor, update_time: Tensor,
                       relation_table: Tensor,
                       msg_time_encoder: TimeEncoder) -> tuple[Tensor, Tensor, Tensor]:
    """Vectorized raw messages for a chronological link batch.

    Endpoint memories are read from the state at batch entry (a node touched
    twice in the batch contributes both messages from the same snapshot).
    Returns (vectors (2B, D), owners (2B,), timestamps (2B,)); row order
    interleaves source/destination messages per link, so per-node
    subsequences stay chronological with insertion-order ties.
    """
    t_s, t_d = update_time[sources], update_time[destinations]
    if bool((timestamps < t_s).any()) or bool((timestamps < t_d).any()):
        raise StalenessError("batch contains links older than memory update times")
    te_s = msg_time_encoder(timestamps - t_s)
    te_d = msg_time_encoder(timestamps - t_d)
    re_r = relation_table[relations]
    msg_s = torch.cat([memory[sources], memory[destinations], re_r, te_s], dim=1)
    msg_d = torch.cat([memory[destinations], memory[sources], re_r, te_d], dim=1)
    batch = torch.stack([msg_s, msg_d], dim=1).reshape(2 * len(sources), -1)
    owners = torch.stack([sources, destinations], dim=1).reshape(-1)
    times = torch.stack([timestamps, timestamps], dim=1).reshape(-1)
    return batch, owners, times


class MessageFunction(nn.Module):
    """Two-layer feed-forward map from raw messages to messages; first layer
    ReLU, second linear, output batch-normalized over the batch dimension.
    """

    def __init__(self, raw_dim: int, message_dim: int):
        super().__init__()
        self.layer1 = nn.Linear(raw_dim, message_dim)
        self.layer2 = nn.Linear(message_dim, message_dim)
        self.norm = nn.BatchNorm1d(message_dim, eps=1e-5, momentum=0.1)

    def forward(self, raw: Tensor) -> Tensor:
        if raw.ndim != 2 or raw.shape[0] == 0:
            raise ValueError("message batch must be non-empty and 2-D")
        return self.norm(self.layer2(torch.relu(self.layer1(raw))))


class MemoryUpdater(nn.Module):
    """GRU over each node's chronological message sequence, seeded by the
    node's current memory; no message aggregation, every message is consumed.
    """

    def __init__(self, message_dim: int, mem_dim: int):
        super().__init__()
        self.cell = nn.GRUCell(message_dim, mem_dim)

    def update_node(self, state: NodeMemoryState, node: int,
                    messages: list[tuple[Tensor, int]]) -> NodeMemoryState:
        """Apply one node's messages ((vector, timestamp) pairs, chronological)
        in place; empty list is a no-op. Mutates and returns ``state``.
        """
        if not messages:
            return state
        times = [t for _, t in messages]
        if any(b < a for a, b in zip(times, times[1:])):
            raise MessageOrderError(f"out-of-order messages for node {node}")
        if times[0] < int(state.update_time[node]):
            raise StalenessError(
                f"message at t={times[0]} older than node {node}'s update time")
        with torch.no_grad():
            h = state.memory[node].unsqueeze(0)
            for vec, _ in messages:
                h = self.cell(vec.unsqueeze(0), h)
            state.memory[node] = h.squeeze(0)
            state.update_time[node] = max(times)
        return state

    def run_sequences(self, init_hidden: Tensor, padded: Tensor,
                      lengths: Tensor) -> Tensor:
        """Run the GRU over padded per-node sequences (M, T, message_dim)
        starting from (M, mem_dim) hidden states; returns final hidden states.
        Differentiable (used by the training compromise path).
        """
        h = init_hidden
        for step in range(padded.shape[1]):
            active = lengths > step
            if not bool(active.any()):
                break
            h_new = self.cell(padded[:, step, :], h)
            h = torch.where(active.unsqueeze(1), h_new, h)
        return h


def group_messages_by_node(owners: Tensor, messages: Tensor,
                           times: Tensor) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Group a chronological message batch per owner node.

    Returns (unique_nodes (M,), padded (M, T, D), lengths (M,), new_times (M,))
    where new_times is each node's max message timestamp. Row order within a
    node follows the batch order, which is chronological by construction.
    """
    unique_nodes, inverse = torch.unique(owners, return_inverse=True)
    m = len(unique_nodes)
    counts = torch.bincount(inverse, minlength=m)
    max_len = int(counts.max())
    # stable sort keeps batch (chronological) order within each group
    order = torch.argsort(inverse, stable=True)
    sorted_groups = inverse[order]
    offsets = torch.cumsum(counts, dim=0) - counts
    positions = torch.arange(len(owners)) - offsets[sorted_groups]
    padded = messages.new_zeros(m, max_len, messages.shape[1])
    padded[sorted_groups, positions] = messages[order]
    # chronological order per group makes the last entry the max timestamp
    new_times = times[order][offsets + counts - 1]
    return unique_nodes, padded, counts, new_times

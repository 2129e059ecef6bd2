"""One-layer multi-head temporal graph attention over recent neighbor links."""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn


class TemporalAttention(nn.Module):
    """Attend a node query (initial embedding ++ source-time encoding) over
    neighbor rows (neighbor initial embedding ++ neighbor-time encoding ++
    relation embedding), then merge query and attention output with a
    two-layer perceptron back to embed_dim.
    """

    def __init__(self, embed_dim: int, time_dim: int, relation_dim: int,
                 n_heads: int, dropout: float = 0.0):
        super().__init__()
        query_dim = embed_dim + time_dim
        kv_dim = embed_dim + time_dim + relation_dim
        if query_dim % n_heads != 0:
            raise ValueError(f"query dim {query_dim} not divisible by {n_heads} heads")
        self.n_heads = n_heads
        self.head_dim = query_dim // n_heads
        self.q_proj = nn.Linear(query_dim, query_dim)
        self.k_proj = nn.Linear(kv_dim, query_dim)
        self.v_proj = nn.Linear(kv_dim, query_dim)
        self.out_proj = nn.Linear(query_dim, query_dim)
        self.dropout = nn.Dropout(dropout)
        self.merge1 = nn.Linear(2 * query_dim, embed_dim)
        self.merge2 = nn.Linear(embed_dim, embed_dim)

    def forward(self, query: Tensor, neighbor_rows: Tensor,
                valid: Tensor, return_weights: bool = False):
        """query (B, q_dim); neighbor_rows (B, L, kv_dim); valid (B, L) bool.

        Every sample must have at least one valid row (callers insert an
        all-zero padding row for isolated nodes).
        """
        b, length, _ = neighbor_rows.shape
        h, dh = self.n_heads, self.head_dim
        q = self.q_proj(query).view(b, h, dh)
        k = self.k_proj(neighbor_rows).view(b, length, h, dh)
        v = self.v_proj(neighbor_rows).view(b, length, h, dh)
        scores = torch.einsum("bhd,blhd->bhl", q, k) / math.sqrt(dh)
        scores = scores.masked_fill(~valid.unsqueeze(1), float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        weights = self.dropout(weights)
        context = torch.einsum("bhl,blhd->bhd", weights, v).reshape(b, h * dh)
        out = self.out_proj(context)
        z = self.merge2(torch.relu(self.merge1(torch.cat([query, out], dim=1))))
        if return_weights:
            return z, weights
        return z

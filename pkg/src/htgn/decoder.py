"""Per-relation decoder bank: one two-layer perceptron per relation, all
relations evaluated in a single batched pass.
"""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn


class RelationDecoderBank(nn.Module):
    """Stacked per-relation MLPs mapping (z_src ++ z_dst) to a probability.

    Weights are stored as stacked tensors indexed by relation so that a mixed
    batch gathers its slices and runs as one einsum per layer; per-slice and
    batched evaluation agree by construction.
    """

    def __init__(self, relation_count: int, embed_dim: int, hidden_dim: int):
        super().__init__()
        self.relation_count = relation_count
        in_dim = 2 * embed_dim
        self.w1 = nn.Parameter(torch.empty(relation_count, in_dim, hidden_dim))
        self.b1 = nn.Parameter(torch.empty(relation_count, hidden_dim))
        self.w2 = nn.Parameter(torch.empty(relation_count, hidden_dim))
        self.b2 = nn.Parameter(torch.empty(relation_count))
        bound1 = 1.0 / math.sqrt(in_dim)
        bound2 = 1.0 / math.sqrt(hidden_dim)
        nn.init.uniform_(self.w1, -bound1, bound1)
        nn.init.uniform_(self.b1, -bound1, bound1)
        nn.init.uniform_(self.w2, -bound2, bound2)
        nn.init.uniform_(self.b2, -bound2, bound2)

    def _check(self, relations: Tensor):
        if len(relations) and (int(relations.min()) < 0
                               or int(relations.max()) >= self.relation_count):
            raise ValueError("relation id out of range")

    def logits(self, z_src: Tensor, z_dst: Tensor, relations: Tensor) -> Tensor:
        """Raw pre-sigmoid scores for a mixed-relation batch."""
        self._check(relations)
        if len(relations) == 0:
            return z_src.new_zeros(0)
        x = torch.cat([z_src, z_dst], dim=1)
        hidden = torch.relu(
            torch.einsum("bi,bih->bh", x, self.w1[relations]) + self.b1[relations])
        return torch.einsum("bh,bh->b", hidden, self.w2[relations]) + self.b2[relations]

    def predict_prob_batched(self, z_src: Tensor, z_dst: Tensor,
                             relations: Tensor) -> Tensor:
        return torch.sigmoid(self.logits(z_src, z_dst, relations))

    def predict_prob(self, z_src: Tensor, z_dst: Tensor, relation: int) -> float:
        """Single-pair probability; convenience wrapper over the batched path."""
        rel = torch.tensor([relation], dtype=torch.int64)
        with torch.no_grad():
            return float(self.predict_prob_batched(z_src.unsqueeze(0),
                                                   z_dst.unsqueeze(0), rel)[0])

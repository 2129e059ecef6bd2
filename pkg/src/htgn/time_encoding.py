"""Calendar-style encoding of time differences measured in hours."""

from __future__ import annotations

import torch
from torch import Tensor, nn

# moduli of (hours-in-day, days-in-week, days-in-month, weeks-in-month,
# months-in-year)
CALENDAR_MODULI = (24, 7, 30, 5, 12)


def calendar_features(delta: int) -> tuple[int, int, int, int, int]:
    """Decompose a non-negative hour difference into calendar components."""
    if delta < 0:
        raise ValueError(f"negative time difference: {delta}")
    days = delta // 24
    return (delta % 24, days % 7, days % 30, (days // 7) % 5, (days // 30) % 12)


def calendar_features_tensor(delta: Tensor, dtype: torch.dtype) -> Tensor:
    """Batched calendar decomposition, scaled componentwise into [0, 1).

    ``delta`` is an integer tensor of any shape; output appends a size-5 axis.
    """
    if bool((delta < 0).any()):
        raise ValueError("negative time difference in batch")
    days = torch.div(delta, 24, rounding_mode="floor")
    feats = torch.stack([
        delta % 24,
        days % 7,
        days % 30,
        torch.div(days, 7, rounding_mode="floor") % 5,
        torch.div(days, 30, rounding_mode="floor") % 12,
    ], dim=-1).to(dtype)
    moduli = torch.tensor(CALENDAR_MODULI, dtype=dtype, device=delta.device)
    return feats / moduli


class TimeEncoder(nn.Module):
    """Two-layer perceptron over scaled calendar features, ReLU after each
    layer. Three independent instances are used (message / source / neighbor
    time differences); they share nothing.
    """

    def __init__(self, time_dim: int):
        super().__init__()
        self.time_dim = time_dim
        self.layer1 = nn.Linear(len(CALENDAR_MODULI), time_dim)
        self.layer2 = nn.Linear(time_dim, time_dim)

    def forward(self, delta: Tensor) -> Tensor:
        """Encode integer hour differences; output shape = delta.shape + (time_dim,)."""
        x = calendar_features_tensor(delta, self.layer1.weight.dtype)
        return torch.relu(self.layer2(torch.relu(self.layer1(x))))

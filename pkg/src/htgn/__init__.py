"""Memory-based temporal heterogeneous link prediction with two-window
training and span-query inference."""

from .config import TrainConfig
from .graph_store import GraphStore, TemporalLink, convert_timestamp
from .inference import SpanQuery, auc, expand_span, predict_span
from .memory import NodeMemoryState
from .model import HTGN
from .synthetic import PlantedPattern, SynthSpec, generate
from .trainer import fit, train_epoch, train_step

__all__ = [
    "TrainConfig", "GraphStore", "TemporalLink", "convert_timestamp",
    "SpanQuery", "auc", "expand_span", "predict_span", "NodeMemoryState",
    "HTGN", "PlantedPattern", "SynthSpec", "generate", "fit",
    "train_epoch", "train_step",
]

"""Checkpoint persistence: parameters, memory, id maps, config and the
training link stream (needed at inference time for neighbor lookups).
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np
import torch

from .config import TrainConfig
from .graph_store import GraphStore, IdMap, TemporalLink
from .memory import NodeMemoryState
from .model import HTGN

FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(path, model: HTGN, state: NodeMemoryState,
                    cfg: TrainConfig, store: GraphStore,
                    node_map: IdMap, rel_map: IdMap):
    payload = {
        "format_version": FORMAT_VERSION,
        "seed": cfg.seed,
        "config": asdict(cfg),
        "node_count": model.node_count,
        "relation_count": model.relation_count,
        "start_time": state.start_time,
        "model_state": model.state_dict(),
        "memory": state.memory,
        "update_time": state.update_time,
        "node_raw_ids": node_map.raw_ids,
        "relation_raw_ids": rel_map.raw_ids,
        "links": np.asarray(store.links, dtype=np.int64),
    }
    torch.save(payload, path)


def load_checkpoint(path) -> tuple[HTGN, NodeMemoryState, TrainConfig,
                                   GraphStore, IdMap, IdMap]:
    payload = torch.load(path, weights_only=False)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {version} does not match "
            f"supported version {FORMAT_VERSION}")
    cfg = TrainConfig(**payload["config"])
    model = HTGN(payload["node_count"], payload["relation_count"], cfg,
                 start_time=payload["start_time"])
    model.load_state_dict(payload["model_state"])
    state = model.new_memory_state()
    state.memory = payload["memory"]
    state.update_time = payload["update_time"]
    store = GraphStore(payload["node_count"], payload["relation_count"])
    for row in payload["links"]:
        store.insert_link(TemporalLink(*(int(x) for x in row)))
    node_map = IdMap(payload["node_raw_ids"])
    rel_map = IdMap(payload["relation_raw_ids"])
    return model, state, cfg, store, node_map, rel_map

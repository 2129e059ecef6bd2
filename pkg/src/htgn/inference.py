"""Span-query inference (hourly decomposition, max aggregation) and AUC."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import torch

from .graph_store import (GraphStore, IdMap, InputError, TemporalLink,
                          convert_timestamp)
from .memory import NodeMemoryState
from .model import HTGN


class MetricError(Exception):
    """AUC is undefined (single-class labels)."""


@dataclass(frozen=True)
class SpanQuery:
    source: int
    destination: int
    relation: int
    start: int  # hours, inclusive
    end: int    # hours, inclusive
    label: Optional[int] = None

    def __post_init__(self):
        if self.start > self.end:
            raise InputError(f"span start {self.start} > end {self.end}")


def expand_span(query: SpanQuery) -> list[tuple[int, int, int, int]]:
    """Hourly point queries covering the closed span, ascending in time."""
    return [(query.source, query.destination, query.relation, t)
            for t in range(query.start, query.end + 1)]


def predict_points(model: HTGN, store: GraphStore, state: NodeMemoryState,
                   points: Sequence[tuple[int, int, int, int]]) -> np.ndarray:
    """Probabilities for point queries; read-only w.r.t. model and memory."""
    if not points:
        return np.zeros(0)
    arr = np.asarray(points, dtype=np.int64)
    if arr[:, 0].max() >= model.node_count or arr[:, 1].max() >= model.node_count:
        raise InputError("node id out of range in query")
    if arr[:, 2].max() >= model.relation_count:
        raise InputError("relation id out of range in query")
    model.eval()
    with torch.no_grad():
        ends = torch.from_numpy(np.concatenate([arr[:, 0], arr[:, 1]]))
        times = torch.from_numpy(np.concatenate([arr[:, 3], arr[:, 3]]))
        z = model.temporal_embeddings(ends, times, store,
                                      state.memory, state.update_time)
        probs = model.decoder.predict_prob_batched(
            z[:len(arr)], z[len(arr):], torch.from_numpy(arr[:, 2]))
    return probs.numpy()


def predict_span(model: HTGN, store: GraphStore, state: NodeMemoryState,
                 query: SpanQuery, aggregation: str = "max") -> float:
    """Aggregate the hourly point probabilities over the span (max by
    default; mean is available but untuned)."""
    probs = predict_points(model, store, state, expand_span(query))
    if aggregation == "max":
        return float(probs.max())
    if aggregation == "mean":
        return float(probs.mean())
    raise InputError(f"unknown aggregation: {aggregation}")


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Rank-based AUC: probability a random positive outranks a random
    negative, ties counted one half.
    """
    from scipy.stats import rankdata

    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if len(scores) != len(labels):
        raise InputError("scores and labels differ in length")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores, method="average")
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def build_point_queries(links: Iterable[TemporalLink], node_count: int,
                        relation_count: int,
                        rng: np.random.Generator) -> list[SpanQuery]:
    """Point-span validation queries: each held-out link as a positive plus
    one corruption (random endpoint or relation) as a negative."""
    queries: list[SpanQuery] = []
    for s, d, r, t in links:
        queries.append(SpanQuery(s, d, r, t, t, label=1))
        dim = int(rng.integers(0, 3))
        s2, d2, r2 = s, d, r
        if dim == 0:
            s2 = int(rng.integers(0, node_count))
        elif dim == 1:
            d2 = int(rng.integers(0, node_count))
        else:
            r2 = int(rng.integers(0, relation_count))
        queries.append(SpanQuery(s2, d2, r2, t, t, label=0))
    return queries


def load_query_file(path, node_map: Optional[IdMap] = None,
                    rel_map: Optional[IdMap] = None) -> list[SpanQuery]:
    """Parse ``source,destination,relation,start_s,end_s[,label]`` lines;
    both bounds are raw seconds and get floored to hours."""
    queries: list[SpanQuery] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) not in (5, 6):
                raise InputError(f"{path}:{lineno}: expected 5 or 6 fields")
            try:
                vals = [int(p) for p in parts]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: non-integer field") from exc
            s, d, r = vals[0], vals[1], vals[2]
            if node_map is not None:
                s, d = node_map.dense(s), node_map.dense(d)
            if rel_map is not None:
                r = rel_map.dense(r)
            label = vals[5] if len(vals) == 6 else None
            if label not in (None, 0, 1):
                raise InputError(f"{path}:{lineno}: label must be 0 or 1")
            queries.append(SpanQuery(s, d, r, convert_timestamp(vals[3]),
                                     convert_timestamp(vals[4]), label))
    return queries


def write_query_file(path, queries: Iterable[SpanQuery],
                     node_map: Optional[IdMap] = None,
                     rel_map: Optional[IdMap] = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in queries:
            s, d, r = q.source, q.destination, q.relation
            if node_map is not None:
                s, d = node_map.raw(s), node_map.raw(d)
            if rel_map is not None:
                r = rel_map.raw(r)
            row = f"{s},{d},{r},{q.start * 3600},{q.end * 3600}"
            if q.label is not None:
                row += f",{q.label}"
            fh.write(row + "\n")


def write_predictions(path, probabilities: Sequence[float]):
    """One probability per line, 8 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in probabilities:
            fh.write(f"{p:.8g}\n")


def read_predictions(path) -> list[float]:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: not a number") from exc
    return values

"""Two-window training loop: a memory-update batch that advances node memory
and an adjacent prediction-window batch (positives plus two kinds of sampled
negatives) that drives the parameter update.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch

from .config import TrainConfig
from .graph_store import GraphStore, InputError, TemporalLink
from .memory import NodeMemoryState
from .model import HTGN


@dataclass
class TrainWindows:
    """One step's paired batches and window bounds."""
    memory_batch: list[TemporalLink]
    positives: list[TemporalLink]
    negatives: Optional[np.ndarray]  # (N, 4) int64 rows (src, dst, rel, t)
    bt_mw: int
    et_mw: int
    pred_start: int
    pred_end: int


@dataclass
class EpochStats:
    mean_loss: float
    steps: int
    losses: list[float] = field(default_factory=list)


def next_windows(store: GraphStore, cursor: int, cfg: TrainConfig,
                 rng: np.random.Generator) -> Optional[tuple[TrainWindows, int]]:
    """Cut the next memory batch from the link stream and collect prediction
    positives from the window right after it. Returns None when exhausted.
    """
    if cursor >= len(store.links):
        return None
    memory_batch = store.links[cursor:cursor + cfg.memory_update_batch_size]
    bt_mw = memory_batch[0].timestamp
    et_mw = memory_batch[-1].timestamp  # stream is chronological
    pred_start = et_mw + 1
    pred_end = et_mw + cfg.prediction_window_hours
    positives = store.links_in_window(pred_start, pred_end)
    if len(positives) > cfg.positive_batch_size:
        keep = rng.choice(len(positives), size=cfg.positive_batch_size,
                          replace=False)
        keep.sort()
        positives = [positives[i] for i in keep]
    windows = TrainWindows(memory_batch, positives, None,
                           bt_mw, et_mw, pred_start, pred_end)
    return windows, cursor + len(memory_batch)


def _replace_uniform(original: np.ndarray, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Uniform draw over [0, count) excluding each row's original value."""
    draw = rng.integers(0, count - 1, size=len(original))
    return draw + (draw >= original)


def sample_negatives(positives: list[TemporalLink], cfg: TrainConfig,
                     store: GraphStore, rng: np.random.Generator,
                     pred_start: int, pred_end: int) -> np.ndarray:
    """Both negative-sampling strategies, stacked.

    Pure random: fully random quadruples with timestamps inside the prediction
    window. Dimension-varying: three negatives per positive, each replacing
    exactly one of source / destination / relation with a different random id.
    A negative that exactly matches a positive quadruple is resampled once.
    """
    if not positives:
        raise InputError("sample_negatives requires a non-empty positive batch")
    if store.node_count < 2 or store.relation_count < 2:
        raise InputError("dimension-varying sampling needs >= 2 nodes and relations")

    def pure_random(n: int) -> np.ndarray:
        return np.stack([
            rng.integers(0, store.node_count, size=n),
            rng.integers(0, store.node_count, size=n),
            rng.integers(0, store.relation_count, size=n),
            rng.integers(pred_start, pred_end + 1, size=n),
        ], axis=1).astype(np.int64)

    pos = np.asarray(positives, dtype=np.int64)
    varied = np.repeat(pos, 3, axis=0)
    idx = np.arange(len(varied))
    for dim, count in ((0, store.node_count), (1, store.node_count),
                       (2, store.relation_count)):
        rows = idx % 3 == dim
        varied[rows, dim] = _replace_uniform(varied[rows, dim], count, rng)

    negatives = np.concatenate([pure_random(cfg.pure_random_negative_size),
                                varied], axis=0)

    # one resampling pass on exact quadruple collisions with the positives
    positive_set = {tuple(row) for row in pos}
    for i, row in enumerate(negatives):
        if tuple(row) in positive_set:
            if i < cfg.pure_random_negative_size:
                negatives[i] = pure_random(1)[0]
            else:
                j = (i - cfg.pure_random_negative_size) % 3
                count = store.relation_count if j == 2 else store.node_count
                negatives[i, j] = _replace_uniform(negatives[i:i + 1, j], count, rng)[0]
    return negatives


def compute_step_loss(model: HTGN, store: GraphStore, state: NodeMemoryState,
                      windows: TrainWindows):
    """Run both phases of one step and return
    (loss or None, touched nodes, new memory rows, new update times).

    The returned rows are grad-carrying; nothing is committed to ``state``.
    """
    mem = np.asarray(windows.memory_batch, dtype=np.int64)
    nodes, new_rows, new_times = model.memory_phase(
        torch.from_numpy(mem[:, 0]), torch.from_numpy(mem[:, 1]),
        torch.from_numpy(mem[:, 2]), torch.from_numpy(mem[:, 3]), state)
    if not windows.positives:
        return None, nodes, new_rows, new_times

    cur_mem = state.memory.clone()
    cur_mem[nodes] = new_rows
    cur_ut = state.update_time.clone()
    cur_ut[nodes] = new_times

    pos = np.asarray(windows.positives, dtype=np.int64)
    neg = windows.negatives if windows.negatives is not None else np.zeros((0, 4), np.int64)
    samples = np.concatenate([pos, neg], axis=0)
    labels = torch.zeros(len(samples), dtype=state.memory.dtype)
    labels[:len(pos)] = 1.0

    ends = torch.from_numpy(np.concatenate([samples[:, 0], samples[:, 1]]))
    times = torch.from_numpy(np.concatenate([samples[:, 3], samples[:, 3]]))
    z = model.temporal_embeddings(ends, times, store, cur_mem, cur_ut)
    z_src, z_dst = z[:len(samples)], z[len(samples):]
    logits = model.decoder.logits(z_src, z_dst, torch.from_numpy(samples[:, 2]))
    loss = torch.nn.functional.binary_cross_entropy_with_logits(logits, labels)
    return loss, nodes, new_rows, new_times


def train_step(model: HTGN, store: GraphStore, state: NodeMemoryState,
               windows: TrainWindows,
               optimizer: torch.optim.Optimizer) -> Optional[float]:
    """One optimization step. Memory advances even when the prediction batch
    is empty; the optimizer never touches memory.
    """
    model.train()
    loss, nodes, new_rows, new_times = compute_step_loss(model, store, state, windows)
    if loss is not None:
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    state.commit(nodes, new_rows, new_times)
    return None if loss is None else float(loss.detach())


def train_epoch(model: HTGN, store: GraphStore, state: NodeMemoryState,
                cfg: TrainConfig, optimizer: torch.optim.Optimizer,
                rng: np.random.Generator) -> EpochStats:
    """Replay the stream once: reset memory, then slide the window pair."""
    state.reset()
    cursor = 0
    losses: list[float] = []
    steps = 0
    while True:
        nxt = next_windows(store, cursor, cfg, rng)
        if nxt is None:
            break
        windows, cursor = nxt
        if windows.positives:
            windows.negatives = sample_negatives(
                windows.positives, cfg, store, rng,
                windows.pred_start, windows.pred_end)
        loss = train_step(model, store, state, windows, optimizer)
        if loss is not None:
            losses.append(loss)
        steps += 1
    mean_loss = float(np.mean(losses)) if losses else float("nan")
    return EpochStats(mean_loss, steps, losses)


def split_by_time(store: GraphStore, fraction: float) -> tuple[GraphStore, list[TemporalLink]]:
    """Hold out the last ``fraction`` of the stream's time range.

    Returns a store over the earlier links plus the held-out tail links.
    """
    if fraction <= 0 or len(store.links) == 0:
        return store, []
    lo, hi = store.min_timestamp, store.max_timestamp
    cut = lo + int((1.0 - fraction) * (hi - lo))
    train_store = GraphStore(store.node_count, store.relation_count)
    held_out = []
    for link in store.links:
        if link.timestamp <= cut:
            train_store.insert_link(link)
        else:
            held_out.append(link)
    return train_store, held_out


def fit(store: GraphStore, cfg: TrainConfig,
        epochs: Optional[int] = None, log=None):
    """Train for the configured epochs, selecting the best epoch by AUC on a
    validation split (the last slice of the stream by time). Returns
    (model, memory state, history) with the best epoch's parameters/memory
    restored.
    """
    from .inference import auc, build_point_queries, predict_span

    epochs = cfg.epochs if epochs is None else epochs
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    train_store, val_links = split_by_time(store, cfg.validation_fraction)
    start_time = train_store.min_timestamp or 0
    model = HTGN(store.node_count, store.relation_count, cfg,
                 start_time=start_time)
    state = model.new_memory_state()
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    val_queries = build_point_queries(val_links, store.node_count,
                                      store.relation_count,
                                      np.random.default_rng(cfg.seed + 1))

    history = []
    best = None
    for epoch in range(1, epochs + 1):
        stats = train_epoch(model, train_store, state, cfg, optimizer, rng)
        entry = {"epoch": epoch, "mean_loss": stats.mean_loss,
                 "steps": stats.steps}
        if val_queries:
            scores = [predict_span(model, train_store, state, q,
                                   aggregation=cfg.span_aggregation)
                      for q in val_queries]
            entry["val_auc"] = auc(scores, [q.label for q in val_queries])
        history.append(entry)
        if log:
            log(entry)
        score = entry.get("val_auc", -entry["mean_loss"])
        if best is None or score >= best[0]:
            best = (score, copy.deepcopy(model.state_dict()), state.clone())
    model.load_state_dict(best[1])
    state = best[2]
    return model, state, history

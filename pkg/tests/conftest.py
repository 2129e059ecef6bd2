import numpy as np
import pytest
import torch

from htgn.config import TrainConfig
from htgn.graph_store import GraphStore, TemporalLink


def make_random_store(rng, node_count=20, relation_count=4, n_links=200,
                      max_hour=500):
    """Random chronological store plus the raw link list for oracles."""
    hours = np.sort(rng.integers(0, max_hour, size=n_links))
    links = [TemporalLink(int(rng.integers(0, node_count)),
                          int(rng.integers(0, node_count)),
                          int(rng.integers(0, relation_count)),
                          int(h)) for h in hours]
    store = GraphStore(node_count, relation_count)
    for link in links:
        store.insert_link(link)
    return store, links


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_cfg():
    """Small dimensions for fast unit tests."""
    return TrainConfig(embed_dim=8, relation_dim=6, time_dim=8, n_heads=2,
                       neighbor_count=5, dropout=0.0,
                       memory_update_batch_size=16, positive_batch_size=8,
                       pure_random_negative_size=8,
                       dimension_varying_negative_size=24,
                       prediction_window_hours=48, epochs=2, seed=0)


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)

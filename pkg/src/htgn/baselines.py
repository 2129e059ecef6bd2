"""Trivial reference scorers used to sanity-check learned models."""

from __future__ import annotations

from typing import Iterable, Sequence

from .graph_store import TemporalLink

RECENCY_WINDOW_HOURS = 7 * 24


def recency_scores(train_links: Iterable[TemporalLink],
                   queries: Sequence, window_hours: int = RECENCY_WINDOW_HOURS
                   ) -> list[float]:
    """1.0 if the query's (pair, relation) appeared in the last week of the
    training stream, else 0.0. Pairs are unordered."""
    links = list(train_links)
    if not links:
        return [0.0] * len(queries)
    cut = max(l.timestamp for l in links) + 1
    recent = {(min(s, d), max(s, d), r) for s, d, r, t in links
              if t >= cut - window_hours}
    return [1.0 if (min(q.source, q.destination),
                    max(q.source, q.destination), q.relation) in recent else 0.0
            for q in queries]

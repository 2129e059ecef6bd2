"""Chronological store of typed, timestamped, undirected link events."""

from __future__ import annotations

import bisect
from pathlib import Path
from typing import Iterable, NamedTuple, Optional

SECONDS_PER_HOUR = 3600


class TemporalLink(NamedTuple):
    source: int
    destination: int
    relation: int
    timestamp: int  # hours since epoch


class OrderingError(Exception):
    """Link inserted out of chronological order."""


class InputError(Exception):
    """Out-of-range ids, negative timestamps, malformed windows."""


def convert_timestamp(raw_seconds: int) -> int:
    """Floor a raw seconds-since-epoch timestamp down to whole hours."""
    if raw_seconds < 0:
        raise InputError(f"negative raw timestamp: {raw_seconds}")
    return raw_seconds // SECONDS_PER_HOUR


class IdMap:
    """Dense id assignment in first-appearance order, remembering raw ids."""

    def __init__(self, raw_ids: Optional[Iterable[int]] = None):
        self._to_dense: dict[int, int] = {}
        self._to_raw: list[int] = []
        if raw_ids is not None:
            for raw in raw_ids:
                self.get_or_assign(raw)

    def __len__(self) -> int:
        return len(self._to_raw)

    def get_or_assign(self, raw: int) -> int:
        dense = self._to_dense.get(raw)
        if dense is None:
            dense = len(self._to_raw)
            self._to_dense[raw] = dense
            self._to_raw.append(raw)
        return dense

    def dense(self, raw: int) -> int:
        if raw not in self._to_dense:
            raise InputError(f"unknown raw id: {raw}")
        return self._to_dense[raw]

    def raw(self, dense: int) -> int:
        return self._to_raw[dense]

    @property
    def raw_ids(self) -> list[int]:
        return list(self._to_raw)


class GraphStore:
    """Links sorted by timestamp (insertion order on ties) plus a per-node
    adjacency index of (other endpoint, relation, timestamp) triples.

    Construction is single-writer and strictly chronological; reads are safe
    to run concurrently once construction is done.
    """

    def __init__(self, node_count: int, relation_count: int):
        if node_count <= 0 or relation_count <= 0:
            raise InputError("node_count and relation_count must be positive")
        self.node_count = node_count
        self.relation_count = relation_count
        self.links: list[TemporalLink] = []
        self._timestamps: list[int] = []
        self._adjacency: list[list[tuple[int, int, int]]] = [[] for _ in range(node_count)]
        self._adj_times: list[list[int]] = [[] for _ in range(node_count)]

    def __len__(self) -> int:
        return len(self.links)

    def insert_link(self, link: TemporalLink):
        s, d, r, t = link
        if not (0 <= s < self.node_count and 0 <= d < self.node_count):
            raise InputError(f"node id out of range in {link}")
        if not 0 <= r < self.relation_count:
            raise InputError(f"relation id out of range in {link}")
        if t < 0:
            raise InputError(f"negative timestamp in {link}")
        if self._timestamps and t < self._timestamps[-1]:
            raise OrderingError(
                f"link at t={t} inserted after t={self._timestamps[-1]}")
        self.links.append(link)
        self._timestamps.append(t)
        self._adjacency[s].append((d, r, t))
        self._adj_times[s].append(t)
        if d != s:
            self._adjacency[d].append((s, r, t))
            self._adj_times[d].append(t)

    def recent_neighbors(self, node: int, reference_time: int,
                         k: int) -> list[tuple[int, int, int]]:
        """The <= k most recent links incident to ``node`` at or before
        ``reference_time``, most recent first; ties go to the latest insert.
        """
        if k <= 0:
            raise InputError(f"k must be positive, got {k}")
        if not 0 <= node < self.node_count:
            raise InputError(f"node id out of range: {node}")
        times = self._adj_times[node]
        hi = bisect.bisect_right(times, reference_time)
        lo = max(0, hi - k)
        return self._adjacency[node][lo:hi][::-1]

    def links_in_window(self, start: int, end: int) -> list[TemporalLink]:
        """All links with start <= timestamp <= end, in store order."""
        if start > end:
            raise InputError(f"window start {start} > end {end}")
        lo = bisect.bisect_left(self._timestamps, start)
        hi = bisect.bisect_right(self._timestamps, end)
        return self.links[lo:hi]

    @property
    def max_timestamp(self) -> Optional[int]:
        return self._timestamps[-1] if self._timestamps else None

    @property
    def min_timestamp(self) -> Optional[int]:
        return self._timestamps[0] if self._timestamps else None


def load_edge_file(path) -> tuple[GraphStore, IdMap, IdMap]:
    """Load ``source,destination,relation,timestamp_seconds`` lines.

    Raw node/relation ids are remapped to dense integers in first-appearance
    order; the maps are returned so checkpoints can persist them.
    """
    rows: list[tuple[int, int, int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise InputError(f"{path}:{lineno}: expected 4 comma-separated fields")
            try:
                s, d, r, ts = (int(p) for p in parts)
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: non-integer field") from exc
            try:
                rows.append((s, d, r, convert_timestamp(ts)))
            except InputError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    node_map, rel_map = IdMap(), IdMap()
    dense_rows = [(node_map.get_or_assign(s), node_map.get_or_assign(d),
                   rel_map.get_or_assign(r), t) for s, d, r, t in rows]
    store = GraphStore(max(len(node_map), 1), max(len(rel_map), 1))
    for lineno, (s, d, r, t) in enumerate(dense_rows, start=1):
        try:
            store.insert_link(TemporalLink(s, d, r, t))
        except OrderingError as exc:
            raise OrderingError(f"{path}: line {lineno}: {exc}") from exc
    return store, node_map, rel_map


def write_edge_file(path, links: Iterable[TemporalLink],
                    node_map: Optional[IdMap] = None,
                    rel_map: Optional[IdMap] = None):
    """Write links as raw-id, seconds-timestamp CSV lines (LF endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s, d, r, t in links:
            if node_map is not None:
                s, d = node_map.raw(s), node_map.raw(d)
            if rel_map is not None:
                r = rel_map.raw(r)
            fh.write(f"{s},{d},{r},{t * SECONDS_PER_HOUR}\n")

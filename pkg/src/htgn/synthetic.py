"""Seeded generator of desk-scale temporal heterogeneous graphs with planted
periodic pair/relation patterns, plus labeled held-out span queries over a
prediction horizon after the training cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graph_store import InputError, TemporalLink

PERIOD_CHOICES = (6, 12, 24, 36, 48, 72, 120, 168)


@dataclass(frozen=True)
class PlantedPattern:
    """Every pair in ``pairs`` emits a ``relation`` link at each hour
    congruent to ``phase`` modulo ``period``."""
    pairs: tuple[tuple[int, int], ...]
    relation: int
    period: int
    phase: int


@dataclass
class SynthSpec:
    node_count: int
    relation_count: int
    duration_hours: int
    links_per_hour: float
    patterns: list[PlantedPattern] = field(default_factory=list)
    noise_fraction: float = 0.3
    seed: int = 0
    query_count: int = 400
    query_horizon_hours: int = 240

    def validate(self):
        if self.node_count < 2 or self.relation_count < 1:
            raise InputError("need at least 2 nodes and 1 relation")
        if self.duration_hours <= 0:
            raise InputError("duration must be positive")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise InputError("noise_fraction must be in [0, 1]")
        if self.links_per_hour <= 0 and self.patterns:
            raise InputError("zero link rate with planted patterns is infeasible")
        for p in self.patterns:
            if p.period < 1 or not 0 <= p.phase < p.period:
                raise InputError(f"bad pattern period/phase: {p}")
            if not 0 <= p.relation < self.relation_count:
                raise InputError(f"pattern relation out of range: {p}")


def _norm_pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


def random_patterns(spec_like: SynthSpec, count: int,
                    rng: np.random.Generator) -> list[PlantedPattern]:
    """Derive ``count`` patterns whose total emission rate matches the
    non-noise share of the configured link rate."""
    total = spec_like.duration_hours * spec_like.links_per_hour
    planted_target = (1.0 - spec_like.noise_fraction) * total
    per_pattern = planted_target / max(count, 1)
    patterns = []
    used_pairs: set[tuple[int, int]] = set()
    for _ in range(count):
        period = int(rng.choice(PERIOD_CHOICES))
        phase = int(rng.integers(0, period))
        relation = int(rng.integers(0, spec_like.relation_count))
        occurrences = max(1, len(range(phase, spec_like.duration_hours, period)))
        pool_size = max(1, round(per_pattern / occurrences))
        pairs = []
        while len(pairs) < pool_size:
            u, v = rng.integers(0, spec_like.node_count, size=2)
            if u == v:
                continue
            pair = _norm_pair(int(u), int(v))
            if pair in used_pairs:
                continue
            used_pairs.add(pair)
            pairs.append(pair)
        patterns.append(PlantedPattern(tuple(pairs), relation, period, phase))
    return patterns


def is_planted(patterns: list[PlantedPattern], source: int, destination: int,
               relation: int, start: int, end: int) -> bool:
    """Would the planted process emit this pair/relation inside [start, end]?"""
    pair = _norm_pair(source, destination)
    for p in patterns:
        if p.relation != relation or pair not in p.pairs:
            continue
        first = start + (p.phase - start) % p.period
        if first <= end:
            return True
    return False


def generate(spec: SynthSpec) -> tuple[list[TemporalLink], list]:
    """Build the training stream and labeled held-out span queries.

    Noise link count is chosen so the total matches duration * links_per_hour;
    positives continue planted patterns after the cut, negatives split between
    never-seen quadruples and recently-seen noise quadruples (both non-planted).
    """
    from .inference import SpanQuery

    spec.validate()
    rng = np.random.default_rng(spec.seed)
    cut = spec.duration_hours

    planted: list[TemporalLink] = []
    for p in spec.patterns:
        for hour in range(p.phase, cut, p.period):
            for u, v in p.pairs:
                planted.append(TemporalLink(u, v, p.relation, hour))

    total_target = round(spec.duration_hours * spec.links_per_hour)
    # fill up to the configured rate; a zero fraction means a pure stream
    noise_count = (max(0, total_target - len(planted))
                   if spec.noise_fraction > 0 else 0)
    planted_keys = {(_norm_pair(u, v), p.relation)
                    for p in spec.patterns for u, v in p.pairs}
    noise: list[TemporalLink] = []
    while len(noise) < noise_count:
        u, v = rng.integers(0, spec.node_count, size=2)
        if u == v:
            continue
        r = int(rng.integers(0, spec.relation_count))
        if (_norm_pair(int(u), int(v)), r) in planted_keys:
            continue
        hour = int(rng.integers(0, cut))
        noise.append(TemporalLink(int(u), int(v), r, hour))

    links = sorted(planted + noise, key=lambda l: l.timestamp)
    queries = _build_queries(spec, links, rng)
    return links, queries


def _build_queries(spec: SynthSpec, links: list[TemporalLink],
                   rng: np.random.Generator) -> list:
    from .inference import SpanQuery

    cut = spec.duration_hours
    horizon_end = cut + spec.query_horizon_hours - 1
    seen_keys = {(_norm_pair(s, d), r) for s, d, r, _ in links}
    recent_noise = [(s, d, r) for s, d, r, t in links
                    if t >= cut - 168
                    and not is_planted(spec.patterns, s, d, r, 0, cut - 1)]
    live = [p for p in spec.patterns
            if p.phase + ((cut - p.phase + p.period - 1) // p.period) * p.period
            <= horizon_end]
    n_pos = spec.query_count // 2

    def random_span_containing(hour: int) -> tuple[int, int]:
        a = int(rng.integers(0, 24))
        b = int(rng.integers(0, 24))
        return max(cut, hour - a), min(horizon_end, hour + b)

    positives = []
    while live and len(positives) < n_pos:
        p = live[int(rng.integers(0, len(live)))]
        pair = p.pairs[int(rng.integers(0, len(p.pairs)))]
        occ = [h for h in range(p.phase + ((cut - p.phase + p.period - 1)
                                           // p.period) * p.period,
                                horizon_end + 1, p.period)]
        hour = int(occ[int(rng.integers(0, len(occ)))])
        start, end = random_span_containing(hour)
        positives.append(SpanQuery(pair[0], pair[1], p.relation, start, end, 1))

    negatives = []
    while len(negatives) < len(positives):
        start = int(rng.integers(cut, horizon_end + 1))
        end = min(horizon_end, start + int(rng.integers(0, 48)))
        if rng.random() < 0.5 and recent_noise:
            s, d, r = recent_noise[int(rng.integers(0, len(recent_noise)))]
        else:
            s, d = (int(x) for x in rng.integers(0, spec.node_count, size=2))
            r = int(rng.integers(0, spec.relation_count))
            if s == d or (_norm_pair(s, d), r) in seen_keys:
                continue
        if is_planted(spec.patterns, s, d, r, start, end):
            continue
        negatives.append(SpanQuery(s, d, r, start, end, 0))

    queries = positives + negatives
    order = rng.permutation(len(queries))
    return [queries[i] for i in order]


def synth_spec_from_mapping(mapping: dict[str, str]) -> SynthSpec:
    """Build a SynthSpec from flat config keys; patterns are derived from the
    seed and ``pattern_count``."""
    from .config import ConfigError, MissingKeyError

    ints = {"node_count", "relation_count", "duration_hours", "pattern_count",
            "seed", "query_count", "query_horizon_hours"}
    floats = {"links_per_hour", "noise_fraction"}
    kwargs: dict = {}
    pattern_count = 0
    for key, value in mapping.items():
        try:
            if key == "pattern_count":
                pattern_count = int(value)
            elif key in ints:
                kwargs[key] = int(value)
            elif key in floats:
                kwargs[key] = float(value)
            else:
                raise ConfigError(f"unknown config key: {key}")
        except ValueError as exc:
            raise ConfigError(f"config key {key}: cannot parse {value!r}") from exc
    for key in ("node_count", "relation_count", "duration_hours", "links_per_hour"):
        if key not in kwargs:
            raise MissingKeyError(key)
    spec = SynthSpec(**kwargs)
    if pattern_count:
        spec.patterns = random_patterns(
            spec, pattern_count, np.random.default_rng(spec.seed))
    spec.validate()
    return spec

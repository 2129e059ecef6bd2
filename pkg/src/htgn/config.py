"""Run configuration and the flat key=value config-file format."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional


class ConfigError(Exception):
    """Malformed configuration file or inconsistent values."""


class MissingKeyError(ConfigError):
    """A required configuration key is absent."""

    def __init__(self, key: str):
        super().__init__(f"missing required config key: {key}")
        self.key = key


# Keys that have no sensible cross-dataset default (they vary per dataset).
REQUIRED_TRAIN_KEYS = ("embed_dim", "relation_dim")


@dataclass
class TrainConfig:
    """All knobs of a training run: dimensions, batch sizes, optimizer.

    ``embed_dim`` is shared by the memory, message, time-encoding and
    temporal-embedding dimensions unless the specific field is overridden.
    """

    embed_dim: int
    relation_dim: int
    time_dim: Optional[int] = None
    message_dim: Optional[int] = None
    decoder_hidden_dim: Optional[int] = None
    n_heads: int = 2
    w0_init: float = 0.1
    w1_init: float = 0.9
    neighbor_count: int = 40
    dropout: float = 0.1
    memory_update_batch_size: int = 1024
    positive_batch_size: int = 1024
    pure_random_negative_size: int = 1024
    dimension_varying_negative_size: int = 3072
    prediction_window_hours: int = 240
    learning_rate: float = 1e-3
    epochs: int = 10
    validation_fraction: float = 0.1
    span_aggregation: str = "max"
    seed: int = 0

    def __post_init__(self):
        if self.time_dim is None:
            self.time_dim = self.embed_dim
        if self.message_dim is None:
            self.message_dim = self.embed_dim
        if self.decoder_hidden_dim is None:
            self.decoder_hidden_dim = self.embed_dim
        self.validate()

    def validate(self):
        for name in ("embed_dim", "relation_dim", "time_dim", "message_dim",
                     "decoder_hidden_dim", "n_heads", "neighbor_count",
                     "memory_update_batch_size", "positive_batch_size",
                     "prediction_window_hours", "epochs"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.dimension_varying_negative_size != 3 * self.positive_batch_size:
            raise ConfigError(
                "dimension_varying_negative_size must equal 3 * positive_batch_size "
                f"({self.dimension_varying_negative_size} != 3 * {self.positive_batch_size})")
        if (self.embed_dim + self.time_dim) % self.n_heads != 0:
            raise ConfigError(
                f"embed_dim + time_dim = {self.embed_dim + self.time_dim} "
                f"not divisible by n_heads = {self.n_heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in [0, 1)")
        if self.span_aggregation not in ("max", "mean"):
            raise ConfigError(f"unknown span_aggregation: {self.span_aggregation}")


def parse_kv_file(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; '#' starts a comment.

    Raises ConfigError with a line number on malformed lines.
    """
    mapping: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        mapping[key] = value
    return mapping


def _coerce(name: str, value: str, target_type: Any):
    # annotations are strings under `from __future__ import annotations`
    type_name = target_type if isinstance(target_type, str) else getattr(
        target_type, "__name__", str(target_type))
    try:
        if "int" in type_name:
            return int(value)
        if "float" in type_name:
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"config key {name}: cannot parse {value!r}") from exc


def train_config_from_mapping(mapping: dict[str, str],
                              overrides: Optional[dict[str, Any]] = None) -> TrainConfig:
    """Build a TrainConfig from parsed file keys plus CLI overrides."""
    known = {f.name: f.type for f in fields(TrainConfig)}
    kwargs: dict[str, Any] = {}
    for key, value in mapping.items():
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        kwargs[key] = _coerce(key, value, known[key])
    if overrides:
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
    for key in REQUIRED_TRAIN_KEYS:
        if key not in kwargs:
            raise MissingKeyError(key)
    return TrainConfig(**kwargs)

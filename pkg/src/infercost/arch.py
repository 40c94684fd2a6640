"""Model architecture description and workload-point types shared by all modules.

Symbols used throughout the package: h = hidden size, h' = intermediate (FFN)
size, n = number of attention heads, d = head dimension, l = decoder layers,
b = batch size, s = sequence length (prefill) or cached past tokens (decode).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from enum import Enum
from pathlib import Path


class ConfigError(ValueError):
    """A model config violates its invariants."""


class DimensionMismatchError(ConfigError):
    """hidden_size != num_heads * head_dim (or a vector length mismatch)."""


class NonPositiveFieldError(ConfigError):
    """A dimension that must be strictly positive is zero or negative."""


class Phase(Enum):
    PREFILL = "prefill"
    DECODE = "decode"


@dataclass(frozen=True)
class ModelConfig:
    """Decoder-stack dimensions of a LLaMA-style model plus scalar width.

    bytes_per_scalar defaults to 2 (bf16); set 4 for fp32 or 1 for fp8
    what-if analyses.
    """

    hidden_size: int
    intermediate_size: int
    num_heads: int
    head_dim: int
    num_layers: int
    bytes_per_scalar: int = 2

    def __post_init__(self) -> None:
        _check_config(self)

    # Short aliases matching the formula notation.
    @property
    def h(self) -> int:
        return self.hidden_size

    @property
    def h_ffn(self) -> int:
        return self.intermediate_size

    @property
    def n(self) -> int:
        return self.num_heads

    @property
    def d(self) -> int:
        return self.head_dim

    @property
    def l(self) -> int:
        return self.num_layers


def _check_config(cfg: ModelConfig) -> None:
    for name in ("hidden_size", "intermediate_size", "num_heads", "head_dim",
                 "num_layers", "bytes_per_scalar"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        if value <= 0:
            raise NonPositiveFieldError(f"{name} must be strictly positive, got {value}")
    if cfg.hidden_size != cfg.num_heads * cfg.head_dim:
        raise DimensionMismatchError(
            f"hidden_size ({cfg.hidden_size}) != num_heads * head_dim "
            f"({cfg.num_heads} * {cfg.head_dim} = {cfg.num_heads * cfg.head_dim})")


def validate_config(cfg: ModelConfig) -> ModelConfig:
    """Return cfg unchanged iff all invariants hold; raise ConfigError otherwise.

    Idempotent: a valid config validates to an equal config.
    """
    _check_config(cfg)
    return cfg


@dataclass(frozen=True)
class WorkloadPoint:
    """One (batch, length, phase) evaluation point.

    In Phase.DECODE, seq_len is the number of cached past tokens per sequence.
    """

    batch_size: int
    seq_len: int
    phase: Phase

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise NonPositiveFieldError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.seq_len < 1:
            raise NonPositiveFieldError(f"seq_len must be >= 1, got {self.seq_len}")


# Publicly documented LLaMA-2 architectures; the reference measurements in
# paper-data/ were taken on the 7B variant.
MODEL_PRESETS: dict[str, ModelConfig] = {
    "llama2-7b": ModelConfig(hidden_size=4096, intermediate_size=11008,
                             num_heads=32, head_dim=128, num_layers=32),
    "llama2-13b": ModelConfig(hidden_size=5120, intermediate_size=13824,
                              num_heads=40, head_dim=128, num_layers=40),
}


def model_preset(name: str) -> ModelConfig:
    try:
        return MODEL_PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(MODEL_PRESETS))
        raise KeyError(f"unknown model preset {name!r}; known presets: {known}") from None


_MODEL_JSON_KEYS = ("hidden_size", "intermediate_size", "num_heads", "head_dim",
                    "num_layers", "bytes_per_scalar")


def model_config_from_dict(data: dict) -> ModelConfig:
    """Build a validated ModelConfig from a JSON object; unknown keys rejected."""
    if not isinstance(data, dict):
        raise ConfigError(f"model config must be a JSON object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(_MODEL_JSON_KEYS))
    if unknown:
        raise ConfigError(f"unknown model config keys: {', '.join(unknown)}")
    missing = [k for k in _MODEL_JSON_KEYS[:5] if k not in data]
    if missing:
        raise ConfigError(f"missing model config keys: {', '.join(missing)}")
    return ModelConfig(**data)


def load_model_config(path: str | Path) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        return model_config_from_dict(json.load(fh))


def save_model_config(cfg: ModelConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(cfg), fh, indent=2)
        fh.write("\n")


def resolve_model(name_or_path: str | Path) -> ModelConfig:
    """Accept a preset name or a JSON file path (the CLI's --model semantics)."""
    name = str(name_or_path)
    if name in MODEL_PRESETS:
        return MODEL_PRESETS[name]
    if Path(name).exists():
        return load_model_config(name)
    raise ConfigError(f"--model {name!r} is neither a preset "
                      f"({', '.join(sorted(MODEL_PRESETS))}) nor an existing file")


__all__ = [
    "ConfigError", "DimensionMismatchError", "NonPositiveFieldError",
    "Phase", "ModelConfig", "WorkloadPoint", "MODEL_PRESETS",
    "model_preset", "model_config_from_dict", "load_model_config",
    "save_model_config", "resolve_model", "validate_config",
]

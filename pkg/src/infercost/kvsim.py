"""KV-cache memory modeling under three layout disciplines.

Vanilla keeps one contiguous buffer per sequence and reallocates-and-copies
the whole cache on every append; Paged allocates fixed-size token blocks and
appends in place; TokenGranular allocates exactly one token at a time. The
layouts differ in per-step traffic (copy vs append) and in allocation waste
(reservation / block rounding / none).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .arch import ModelConfig, validate_config
from .costmodel import CacheLayout, Paged, TokenGranular, Vanilla, kv_cache_bytes
from .hardware import HardwareSpec


class ReservedOverflowError(ValueError):
    """A sequence outgrew the Vanilla layout's reserved length."""


@dataclass(frozen=True)
class CacheStats:
    """Byte accounting at one observation point: allocated = live + wasted."""

    allocated_bytes: int
    live_bytes: int
    wasted_bytes: int
    peak_allocated_bytes: int

    def __post_init__(self) -> None:
        for name in ("allocated_bytes", "live_bytes", "wasted_bytes",
                     "peak_allocated_bytes"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.allocated_bytes != self.live_bytes + self.wasted_bytes:
            raise ValueError("allocated_bytes must equal live_bytes + wasted_bytes")
        if self.peak_allocated_bytes < self.allocated_bytes:
            raise ValueError("peak_allocated_bytes must be >= allocated_bytes")


def allocated_tokens(layout: CacheLayout, length: int) -> int:
    """Tokens' worth of cache a sequence of `length` tokens occupies."""
    if length < 0:
        raise ValueError(f"sequence length must be >= 0, got {length}")
    if isinstance(layout, Vanilla):
        if length > layout.reserved_len:
            raise ReservedOverflowError(
                f"sequence of {length} tokens exceeds reserved_len={layout.reserved_len}")
        return layout.reserved_len
    if isinstance(layout, Paged):
        return math.ceil(length / layout.block_size) * layout.block_size
    if isinstance(layout, TokenGranular):
        return length
    raise TypeError(f"unknown cache layout: {layout!r}")


def cache_step_bytes(layout: CacheLayout, cfg: ModelConfig, b: int, s_past: int) -> int:
    """Bytes the cache update moves in one decode step, all layers.

    Vanilla reads and rewrites both full caches plus the appended token
    (2 tensors x read+write x h x l x b x (s_past + 1) scalars); Paged and
    TokenGranular touch only the appended token.
    """
    validate_config(cfg)
    if b < 1 or s_past < 0:
        raise ValueError(f"need b >= 1 and s_past >= 0, got b={b}, s_past={s_past}")
    per_token = 2 * cfg.bytes_per_scalar * 2 * cfg.hidden_size * cfg.num_layers * b
    if isinstance(layout, Vanilla):
        return per_token * (s_past + 1)
    if isinstance(layout, (Paged, TokenGranular)):
        return per_token
    raise TypeError(f"unknown cache layout: {layout!r}")


def footprint(layout: CacheLayout, cfg: ModelConfig, seq_lens: list[int]) -> CacheStats:
    """Cache byte accounting for a set of concurrently resident sequences."""
    validate_config(cfg)
    if not seq_lens:
        raise ValueError("seq_lens must be non-empty")
    if any(length < 0 for length in seq_lens):
        raise ValueError("sequence lengths must be >= 0")
    per_token = kv_cache_bytes(cfg, 1, 1)
    live = per_token * sum(seq_lens)
    allocated = per_token * sum(allocated_tokens(layout, length) for length in seq_lens)
    return CacheStats(allocated_bytes=allocated, live_bytes=live,
                      wasted_bytes=allocated - live, peak_allocated_bytes=allocated)


def max_concurrency(layout: CacheLayout, cfg: ModelConfig, hw: HardwareSpec,
                    model_weight_bytes: int, per_seq_len: int) -> int:
    """Largest number of per_seq_len-token sequences whose cache fits beside
    the weights in hw memory. Zero is a valid answer."""
    validate_config(cfg)
    if model_weight_bytes < 0:
        raise ValueError("model_weight_bytes must be >= 0")
    if model_weight_bytes >= hw.memory_bytes:
        raise ValueError(f"model weights ({model_weight_bytes} B) do not fit in "
                         f"{hw.name} memory ({hw.memory_bytes} B)")
    if per_seq_len < 1:
        raise ValueError(f"per_seq_len must be >= 1, got {per_seq_len}")
    per_seq_bytes = kv_cache_bytes(cfg, 1, 1) * allocated_tokens(layout, per_seq_len)
    free = hw.memory_bytes - model_weight_bytes
    return free // per_seq_bytes


__all__ = [
    "CacheLayout", "Vanilla", "Paged", "TokenGranular", "CacheStats",
    "ReservedOverflowError", "allocated_tokens", "cache_step_bytes",
    "footprint", "max_concurrency",
]

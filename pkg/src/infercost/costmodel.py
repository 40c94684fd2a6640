"""Per-operation FLOPs, modeled memory traffic, and arithmetic intensity for
one decoder layer, in both phases, plus KV-cache footprint.

FLOP counts use the usual conventions: 2 FLOPs per multiply-accumulate in a
matmul, 6 per rotary pair (4 mul + 2 add), a lump 4 per attention-score
element for scale+softmax, 5 per element for residual-add + RMSNorm, and 2
per element for Swish+multiply.

MOPs are an ideal single-pass byte model: every input operand is read once,
every result written once, every weight matrix read once, all scaled by
bytes_per_scalar. Real kernels re-read tiles, so modeled MOPs are a lower
bound on traffic and the resulting arithmetic intensity an upper bound. The
bound is tight where weight traffic dominates (decode: modeled QKV intensity
7.98 matches measurement) and loose for prefill matmuls (modeled 1755 vs
~642 measured).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .arch import ModelConfig, validate_config


class OpKind(Enum):
    QKV_PROJ = "QkvProj"
    ROPE = "Rope"
    CACHE_UPDATE = "CacheUpdate"  # decode only
    ATTENTION = "Attention"
    OUT_PROJ = "OutProj"
    ADD_NORM_ATTN = "AddNormAttn"
    GATE_UP_PROJ = "GateUpProj"
    SWISH_MUL = "SwishMul"
    DOWN_PROJ = "DownProj"
    ADD_NORM_FFN = "AddNormFfn"


PREFILL_OP_ORDER: tuple[OpKind, ...] = (
    OpKind.QKV_PROJ, OpKind.ROPE, OpKind.ATTENTION, OpKind.OUT_PROJ,
    OpKind.ADD_NORM_ATTN, OpKind.GATE_UP_PROJ, OpKind.SWISH_MUL,
    OpKind.DOWN_PROJ, OpKind.ADD_NORM_FFN,
)

DECODE_OP_ORDER: tuple[OpKind, ...] = (
    OpKind.QKV_PROJ, OpKind.ROPE, OpKind.CACHE_UPDATE, OpKind.ATTENTION,
    OpKind.OUT_PROJ, OpKind.ADD_NORM_ATTN, OpKind.GATE_UP_PROJ,
    OpKind.SWISH_MUL, OpKind.DOWN_PROJ, OpKind.ADD_NORM_FFN,
)

# The four weight-bearing linear projections.
LINEAR_PROJECTIONS: tuple[OpKind, ...] = (
    OpKind.QKV_PROJ, OpKind.OUT_PROJ, OpKind.GATE_UP_PROJ, OpKind.DOWN_PROJ,
)


@dataclass(frozen=True)
class OpCost:
    """FLOPs, modeled bytes moved, and their ratio for one operation.

    flops and mops are exact integers; arithmetic_intensity is the only
    floating-point quantity (flops / mops, or 0 for pure data movement).
    """

    kind: OpKind
    flops: int
    mops: int
    arithmetic_intensity: float = None  # type: ignore[assignment]  # derived

    def __post_init__(self) -> None:
        if self.flops < 0 or self.mops < 0:
            raise ValueError("flops and mops must be non-negative")
        if self.arithmetic_intensity is None:
            if self.flops == 0:
                ai = 0.0
            elif self.mops == 0:
                ai = math.inf
            else:
                ai = self.flops / self.mops
            object.__setattr__(self, "arithmetic_intensity", ai)


# KV-cache layouts (re-exported by kvsim, which owns their allocation math).
# They live here because decode_op_costs dispatches on them.

@dataclass(frozen=True)
class Vanilla:
    """Contiguous cache re-allocated and copied on every append."""
    reserved_len: int

    def __post_init__(self) -> None:
        if self.reserved_len < 1:
            raise ValueError(f"reserved_len must be >= 1, got {self.reserved_len}")


@dataclass(frozen=True)
class Paged:
    """Fixed-size block allocation; appends touch only the new token."""
    block_size: int = 16

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")


@dataclass(frozen=True)
class TokenGranular:
    """Per-token allocation; appends touch only the new token."""


CacheLayout = Union[Vanilla, Paged, TokenGranular]


def _require_positive(**values: int) -> None:
    for name, value in values.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"{name} must be an integer, got {value!r}")
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")


def prefill_op_costs(cfg: ModelConfig, b: int, s: int) -> list[OpCost]:
    """Per-operation costs of one decoder layer processing a b x s prompt."""
    validate_config(cfg)
    _require_positive(b=b, s=s)
    h, hf, n = cfg.hidden_size, cfg.intermediate_size, cfg.num_heads
    w = cfg.bytes_per_scalar

    add_norm = OpCost(OpKind.ADD_NORM_ATTN, 5 * b * s * h, w * (3 * b * s * h + h))
    rows = [
        OpCost(OpKind.QKV_PROJ, 6 * b * s * h * h, w * (4 * b * s * h + 3 * h * h)),
        OpCost(OpKind.ROPE, 6 * b * s * h, w * 4 * b * s * h),
        OpCost(OpKind.ATTENTION, 4 * b * s * s * h + 4 * b * s * s * n,
               w * (4 * b * s * h + 2 * b * s * s * n)),
        OpCost(OpKind.OUT_PROJ, 2 * b * s * h * h, w * (2 * b * s * h + h * h)),
        add_norm,
        OpCost(OpKind.GATE_UP_PROJ, 4 * b * s * h * hf,
               w * (b * s * h + 2 * h * hf + 2 * b * s * hf)),
        OpCost(OpKind.SWISH_MUL, 2 * b * s * hf, w * 3 * b * s * hf),
        OpCost(OpKind.DOWN_PROJ, 2 * b * s * h * hf,
               w * (b * s * hf + h * hf + b * s * h)),
        OpCost(OpKind.ADD_NORM_FFN, add_norm.flops, add_norm.mops),
    ]
    return rows


def decode_op_costs(cfg: ModelConfig, b: int, s_past: int,
                    cache_layout: CacheLayout = Paged()) -> list[OpCost]:
    """Per-operation costs of one decoder layer generating one token per
    sequence with s_past cached tokens each."""
    validate_config(cfg)
    _require_positive(b=b, s_past=s_past)
    h, hf, n = cfg.hidden_size, cfg.intermediate_size, cfg.num_heads
    w = cfg.bytes_per_scalar

    if isinstance(cache_layout, Vanilla):
        # Reallocate-and-copy: the whole K and V caches are read and rewritten
        # along with the appended token.
        cache_mops = w * 2 * (2 * b * s_past * h + 2 * b * h)
    elif isinstance(cache_layout, (Paged, TokenGranular)):
        # Append-only: the new k, v vectors are written (and read back).
        cache_mops = w * 2 * 2 * b * h
    else:
        raise TypeError(f"unknown cache layout: {cache_layout!r}")

    add_norm = OpCost(OpKind.ADD_NORM_ATTN, 5 * b * h, w * (3 * b * h + h))
    rows = [
        OpCost(OpKind.QKV_PROJ, 6 * b * h * h, w * (4 * b * h + 3 * h * h)),
        OpCost(OpKind.ROPE, 6 * b * h, w * 4 * b * h),
        OpCost(OpKind.CACHE_UPDATE, 0, cache_mops),
        OpCost(OpKind.ATTENTION, 4 * b * s_past * h + 4 * b * s_past * n,
               w * (2 * b * s_past * h + 2 * b * s_past * n + 2 * b * h)),
        OpCost(OpKind.OUT_PROJ, 2 * b * h * h, w * (2 * b * h + h * h)),
        add_norm,
        OpCost(OpKind.GATE_UP_PROJ, 4 * b * h * hf,
               w * (b * h + 2 * h * hf + 2 * b * hf)),
        OpCost(OpKind.SWISH_MUL, 2 * b * hf, w * 3 * b * hf),
        OpCost(OpKind.DOWN_PROJ, 2 * b * h * hf, w * (b * hf + h * hf + b * h)),
        OpCost(OpKind.ADD_NORM_FFN, add_norm.flops, add_norm.mops),
    ]
    return rows


@dataclass(frozen=True)
class ModelCost:
    """Whole-stack totals: num_layers times the per-layer costs."""

    total_flops: int
    total_mops: int
    per_kind: dict[OpKind, OpCost]

    @property
    def arithmetic_intensity(self) -> float:
        if self.total_flops == 0:
            return 0.0
        return self.total_flops / self.total_mops

    # Aliases so a ModelCost quacks like an OpCost for roofline queries.
    @property
    def flops(self) -> int:
        return self.total_flops

    @property
    def mops(self) -> int:
        return self.total_mops


def aggregate(layer_costs: list[OpCost], cfg: ModelConfig) -> ModelCost:
    """Scale one layer's per-op costs by the layer count."""
    validate_config(cfg)
    l = cfg.num_layers
    per_kind: dict[OpKind, OpCost] = {}
    for cost in layer_costs:
        if cost.kind in per_kind:
            raise ValueError(f"duplicate op kind in layer costs: {cost.kind}")
        per_kind[cost.kind] = OpCost(cost.kind, cost.flops * l, cost.mops * l)
    total_flops = sum(c.flops for c in per_kind.values())
    total_mops = sum(c.mops for c in per_kind.values())
    return ModelCost(total_flops, total_mops, per_kind)


def kv_cache_bytes(cfg: ModelConfig, b: int, s: int) -> int:
    """Bytes held by the K and V caches for b sequences of s tokens, all layers."""
    validate_config(cfg)
    if b < 0 or s < 0:
        raise ValueError("b and s must be non-negative")
    return 2 * cfg.num_layers * cfg.hidden_size * cfg.bytes_per_scalar * b * s


__all__ = [
    "OpKind", "OpCost", "ModelCost", "CacheLayout", "Vanilla", "Paged",
    "TokenGranular", "PREFILL_OP_ORDER", "DECODE_OP_ORDER",
    "LINEAR_PROJECTIONS", "prefill_op_costs", "decode_op_costs", "aggregate",
    "kv_cache_bytes",
]

"""Per-op FLOP/byte counts checked against brute-force enumeration oracles."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infercost import (
    DECODE_OP_ORDER,
    PREFILL_OP_ORDER,
    ModelConfig,
    OpCost,
    OpKind,
    Paged,
    TokenGranular,
    Vanilla,
    aggregate,
    decode_op_costs,
    kv_cache_bytes,
    prefill_op_costs,
)
from oracles import (
    brute_decode_bytes,
    brute_decode_flops,
    brute_prefill_bytes,
    brute_prefill_flops,
)

TINY = ModelConfig(hidden_size=4, intermediate_size=8, num_heads=2, head_dim=2,
                   num_layers=1, bytes_per_scalar=2)
LLAMA7B = ModelConfig(4096, 11008, 32, 128, 32)


def by_kind(costs):
    return {c.kind.value: c for c in costs}


# --- brute-force agreement ---------------------------------------------------

@pytest.mark.parametrize("b,s", [(1, 2), (1, 1), (2, 3), (3, 5)])
def test_prefill_flops_match_brute_force_enumeration(b, s):
    want = brute_prefill_flops(4, 2, 2, 8, b, s)
    got = by_kind(prefill_op_costs(TINY, b, s))
    assert set(got) == set(want)
    for name, flops in want.items():
        assert got[name].flops == flops, name


@pytest.mark.parametrize("b,s_past", [(1, 1), (1, 4), (2, 3), (3, 7)])
def test_decode_flops_match_brute_force_enumeration(b, s_past):
    want = brute_decode_flops(4, 2, 2, 8, b, s_past)
    got = by_kind(decode_op_costs(TINY, b, s_past))
    assert set(got) == set(want)
    for name, flops in want.items():
        assert got[name].flops == flops, name


@pytest.mark.parametrize("b,s", [(1, 2), (2, 3), (3, 5)])
def test_prefill_bytes_match_shape_enumeration(b, s):
    want = brute_prefill_bytes(4, 2, 2, 8, b, s, bytes_per_scalar=2)
    got = by_kind(prefill_op_costs(TINY, b, s))
    for name, mops in want.items():
        assert got[name].mops == mops, name


@pytest.mark.parametrize("b,s_past", [(1, 1), (2, 3), (3, 7)])
@pytest.mark.parametrize("vanilla", [False, True])
def test_decode_bytes_match_shape_enumeration(b, s_past, vanilla):
    layout = Vanilla(reserved_len=64) if vanilla else Paged()
    want = brute_decode_bytes(4, 2, 2, 8, b, s_past, 2, vanilla_reserved=vanilla)
    got = by_kind(decode_op_costs(TINY, b, s_past, cache_layout=layout))
    for name, mops in want.items():
        assert got[name].mops == mops, name


def test_tiny_instance_pinned_values():
    got = by_kind(prefill_op_costs(TINY, 1, 2))
    assert got["QkvProj"].flops == 192
    assert got["Rope"].flops == 48
    assert got["Attention"].flops == 96
    assert got["OutProj"].flops == 64
    assert got["AddNormAttn"].flops == 40
    assert got["GateUpProj"].flops == 256
    assert got["SwishMul"].flops == 32
    assert got["DownProj"].flops == 128
    assert got["AddNormFfn"].flops == 40


# --- ordering and structure --------------------------------------------------

def test_prefill_op_order():
    kinds = [c.kind for c in prefill_op_costs(TINY, 1, 2)]
    assert kinds == list(PREFILL_OP_ORDER)
    assert OpKind.CACHE_UPDATE not in kinds
    assert len(kinds) == 9


def test_decode_op_order_has_cache_update_after_rope():
    kinds = [c.kind for c in decode_op_costs(TINY, 1, 2)]
    assert kinds == list(DECODE_OP_ORDER)
    assert kinds.index(OpKind.CACHE_UPDATE) == kinds.index(OpKind.ROPE) + 1
    assert len(kinds) == 10


def test_invalid_workload_rejected():
    with pytest.raises(ValueError):
        prefill_op_costs(TINY, 0, 2)
    with pytest.raises(ValueError):
        prefill_op_costs(TINY, 1, 0)
    with pytest.raises(ValueError):
        decode_op_costs(TINY, 1, 0)
    with pytest.raises(TypeError):
        decode_op_costs(TINY, 1, 2, cache_layout="paged")


def test_opcost_derives_intensity():
    cost = OpCost(OpKind.QKV_PROJ, flops=10, mops=4)
    assert cost.arithmetic_intensity == 2.5
    assert OpCost(OpKind.CACHE_UPDATE, flops=0, mops=4).arithmetic_intensity == 0.0
    assert math.isinf(OpCost(OpKind.QKV_PROJ, flops=5, mops=0).arithmetic_intensity)
    with pytest.raises(ValueError):
        OpCost(OpKind.QKV_PROJ, flops=-1, mops=4)


# --- scaling properties ------------------------------------------------------

@given(b=st.integers(1, 16), s=st.integers(1, 512))
@settings(max_examples=40, deadline=None)
def test_prefill_flops_linear_in_batch(b, s):
    one = by_kind(prefill_op_costs(LLAMA7B, 1, s))
    many = by_kind(prefill_op_costs(LLAMA7B, b, s))
    for name in one:
        assert many[name].flops == b * one[name].flops


@given(s=st.integers(1, 1024))
@settings(max_examples=40, deadline=None)
def test_prefill_attention_quadratic_vs_linear_ops(s):
    at_s = by_kind(prefill_op_costs(LLAMA7B, 2, s))
    at_2s = by_kind(prefill_op_costs(LLAMA7B, 2, 2 * s))
    assert at_2s["Attention"].flops == 4 * at_s["Attention"].flops
    assert at_2s["QkvProj"].flops == 2 * at_s["QkvProj"].flops
    assert at_2s["DownProj"].flops == 2 * at_s["DownProj"].flops


@given(s_past=st.integers(1, 4096))
@settings(max_examples=40, deadline=None)
def test_decode_only_attention_and_cache_depend_on_history(s_past):
    base = by_kind(decode_op_costs(LLAMA7B, 4, 1, cache_layout=Vanilla(8192)))
    later = by_kind(decode_op_costs(LLAMA7B, 4, s_past, cache_layout=Vanilla(8192)))
    for name in base:
        if name in ("Attention", "CacheUpdate"):
            continue
        assert later[name].flops == base[name].flops
        assert later[name].mops == base[name].mops
    assert later["Attention"].flops == s_past * base["Attention"].flops


def test_cache_update_layout_sensitivity():
    paged = by_kind(decode_op_costs(LLAMA7B, 8, 512, cache_layout=Paged()))
    token = by_kind(decode_op_costs(LLAMA7B, 8, 512, cache_layout=TokenGranular()))
    vanilla = by_kind(decode_op_costs(LLAMA7B, 8, 512, cache_layout=Vanilla(2048)))
    assert paged["CacheUpdate"].mops == token["CacheUpdate"].mops
    assert vanilla["CacheUpdate"].mops == 513 * paged["CacheUpdate"].mops
    assert paged["CacheUpdate"].flops == vanilla["CacheUpdate"].flops == 0


# --- aggregation and KV sizing -----------------------------------------------

def test_aggregate_scales_by_layer_count():
    ops = prefill_op_costs(LLAMA7B, 8, 512)
    total = aggregate(ops, LLAMA7B)
    assert total.total_flops == 32 * sum(c.flops for c in ops)
    assert total.total_mops == 32 * sum(c.mops for c in ops)
    assert total.per_kind[OpKind.QKV_PROJ].flops == 32 * ops[0].flops
    assert total.arithmetic_intensity == pytest.approx(
        total.total_flops / total.total_mops)
    with pytest.raises(ValueError):
        aggregate(ops + [ops[0]], LLAMA7B)


def test_kv_cache_bytes_pinned_values():
    assert kv_cache_bytes(LLAMA7B, 1, 1) == 524288           # 2 * 32 * 4096 * 2
    assert kv_cache_bytes(LLAMA7B, 8, 512) == 2147483648
    assert kv_cache_bytes(LLAMA7B, 0, 512) == 0
    with pytest.raises(ValueError):
        kv_cache_bytes(LLAMA7B, -1, 512)


@given(b=st.integers(0, 32), s=st.integers(0, 4096))
@settings(max_examples=40, deadline=None)
def test_kv_cache_bytes_bilinear(b, s):
    assert kv_cache_bytes(LLAMA7B, b, s) == b * s * kv_cache_bytes(LLAMA7B, 1, 1)

"""Discrete-event simulation of batch and online serving.

Requests arrive, are admitted under a scheduling policy, and advance through
the prefill/decode lifecycle; step durations come from the fitted runtime
model. The prefill step itself yields a request's first token, so a request
with output_len L costs one prefill step plus L-1 decode steps, the i-th
decode step running against s_past = input_len + i - 1 cached tokens.

Policies:
  Static     - wait for batch_size queued requests (or the end of the trace),
               run the batch to completion before admitting anyone else. All
               steps are priced at the full padded batch (b = batch size,
               lengths padded to the batch maximum).
  Continuous - admit at every step boundary; each admission runs one exclusive
               prefill step (b=1 at its prompt length), then joins per-token
               decoding; decode steps are priced at b = running sequences and
               the largest s_past in the batch; finished sequences vacate
               immediately.
  SplitFuse  - every step carries exactly token_budget tokens: one decode
               token per running sequence, the remainder filled with prompt
               chunks split off pending prefills (FIFO); priced with the
               prefill model at (b=1, s = tokens carried).

KV accounting: admission reserves the maximum cache a request will ever hold
(input_len + output_len - 1 tokens, rounded up per the capacity's layout) and
releases it on completion. Negative model predictions (possible near zero
workload with a negative intercept) are clamped to zero-duration steps.

Token latency is defined as request latency divided by output_len.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .arch import ModelConfig, Phase
from .costmodel import kv_cache_bytes
from .estimator import RegressionCoefficients, predict_at
from .hardware import HardwareSpec
from .kvsim import CacheLayout, ReservedOverflowError, allocated_tokens


class CapacityError(ValueError):
    """A request cannot ever fit in the configured KV capacity."""


class MissingCoefficientError(ValueError):
    """run() needs fitted coefficients for both phases."""


@dataclass(frozen=True)
class Request:
    id: int
    input_len: int
    output_len: int
    arrival_time_s: float = 0.0

    def __post_init__(self) -> None:
        if self.input_len < 1 or self.output_len < 1:
            raise ValueError(f"request {self.id}: input_len and output_len must be >= 1")
        if self.arrival_time_s < 0:
            raise ValueError(f"request {self.id}: arrival_time_s must be >= 0")


@dataclass(frozen=True)
class Static:
    batch_size: int

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class Continuous:
    max_seqs: Optional[int] = None
    max_batch_tokens: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_seqs is None and self.max_batch_tokens is None:
            raise ValueError("Continuous needs max_seqs and/or max_batch_tokens")
        for name in ("max_seqs", "max_batch_tokens"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")

    @property
    def seq_limit(self) -> int:
        limits = [v for v in (self.max_seqs, self.max_batch_tokens) if v is not None]
        return min(limits)


@dataclass(frozen=True)
class SplitFuse:
    token_budget: int

    def __post_init__(self) -> None:
        if self.token_budget < 1:
            raise ValueError("token_budget must be >= 1")


SchedulingPolicy = Union[Static, Continuous, SplitFuse]


def describe_policy(policy: SchedulingPolicy) -> str:
    if isinstance(policy, Static):
        return f"static(batch_size={policy.batch_size})"
    if isinstance(policy, Continuous):
        parts = []
        if policy.max_seqs is not None:
            parts.append(f"max_seqs={policy.max_seqs}")
        if policy.max_batch_tokens is not None:
            parts.append(f"max_batch_tokens={policy.max_batch_tokens}")
        return f"continuous({','.join(parts)})"
    if isinstance(policy, SplitFuse):
        return f"splitfuse(token_budget={policy.token_budget})"
    raise TypeError(f"unknown policy: {policy!r}")


@dataclass(frozen=True)
class CoefficientPair:
    prefill: RegressionCoefficients
    decode: RegressionCoefficients

    def __post_init__(self) -> None:
        if self.prefill is None or self.decode is None:
            raise MissingCoefficientError("both prefill and decode coefficients are required")
        if self.prefill.phase is not Phase.PREFILL:
            raise MissingCoefficientError("prefill slot holds non-prefill coefficients")
        if self.decode.phase is not Phase.DECODE:
            raise MissingCoefficientError("decode slot holds non-decode coefficients")


@dataclass(frozen=True)
class KvCapacity:
    """Total bytes available to the KV cache, allocated under `layout`."""

    layout: CacheLayout
    total_bytes: int

    def __post_init__(self) -> None:
        if self.total_bytes < 0:
            raise ValueError("total_bytes must be >= 0")

    @classmethod
    def from_hardware(cls, layout: CacheLayout, hw: HardwareSpec,
                      model_weight_bytes: int) -> "KvCapacity":
        if model_weight_bytes >= hw.memory_bytes:
            raise CapacityError(f"model weights ({model_weight_bytes} B) do not fit in "
                                f"{hw.name} memory ({hw.memory_bytes} B)")
        return cls(layout, hw.memory_bytes - model_weight_bytes)


@dataclass(frozen=True)
class RequestRecord:
    id: int
    arrival_s: float
    first_token_s: float
    completion_s: float
    input_len: int
    output_len: int

    @property
    def latency_s(self) -> float:
        return self.completion_s - self.arrival_s

    @property
    def token_latency_s(self) -> float:
        return self.latency_s / self.output_len


@dataclass(frozen=True)
class StepRecord:
    start_s: float
    end_s: float
    kind: str  # prefill | decode | mixed
    batch: int
    tokens: int  # tokens carried by the step
    generated: int  # output tokens produced at the step boundary
    reserved_bytes: int


@dataclass(frozen=True)
class ServingMetrics:
    token_throughput: float
    seq_throughput: float
    mean_token_latency_s: float
    p50_latency_s: float
    p95_latency_s: float
    completed: int


EMPTY_METRICS = ServingMetrics(0.0, 0.0, 0.0, 0.0, 0.0, 0)


@dataclass(frozen=True)
class RunResult:
    metrics: ServingMetrics
    records: tuple[RequestRecord, ...]
    steps: tuple[StepRecord, ...]
    generated_tokens: int
    peak_reserved_bytes: int
    capacity_bytes: Optional[int]


def compute_metrics(records) -> ServingMetrics:
    """Aggregate throughput/latency over a record set.

    The throughput window runs from the earliest arrival to the latest
    completion in the set, so metrics over trimmed records measure the
    steady-state span.
    """
    records = list(records)
    if not records:
        return EMPTY_METRICS
    span = max(r.completion_s for r in records) - min(r.arrival_s for r in records)
    tokens = sum(r.output_len for r in records)
    latencies = np.array([r.latency_s for r in records], dtype=float)
    token_latencies = np.array([r.token_latency_s for r in records], dtype=float)
    token_tp = tokens / span if span > 0 else 0.0
    seq_tp = len(records) / span if span > 0 else 0.0
    return ServingMetrics(
        token_throughput=float(token_tp),
        seq_throughput=float(seq_tp),
        mean_token_latency_s=float(np.mean(token_latencies)),
        p50_latency_s=float(np.percentile(latencies, 50)),
        p95_latency_s=float(np.percentile(latencies, 95)),
        completed=len(records),
    )


class _StepTimer:
    def __init__(self, cfg: ModelConfig, coeffs: CoefficientPair):
        self.cfg = cfg
        self.coeffs = coeffs

    def prefill_s(self, b: int, s: int) -> float:
        return max(0.0, predict_at(self.coeffs.prefill, self.cfg, b, s)) / 1000.0

    def decode_s(self, b: int, s_past: int) -> float:
        return max(0.0, predict_at(self.coeffs.decode, self.cfg, b, s_past)) / 1000.0


class _CapacityTracker:
    def __init__(self, capacity: Optional[KvCapacity], cfg: ModelConfig):
        self.capacity = capacity
        self.per_token = kv_cache_bytes(cfg, 1, 1)
        self.reserved = 0
        self.peak = 0

    def bytes_for(self, req: Request) -> int:
        tokens = req.input_len + req.output_len - 1  # max cache the request holds
        if self.capacity is None:
            return self.per_token * tokens
        try:
            return self.per_token * allocated_tokens(self.capacity.layout, tokens)
        except ReservedOverflowError as exc:
            raise CapacityError(f"request {req.id}: {exc}") from exc

    def require_feasible(self, req: Request) -> None:
        if self.capacity is not None and self.bytes_for(req) > self.capacity.total_bytes:
            raise CapacityError(
                f"request {req.id} needs {self.bytes_for(req)} B of KV cache, "
                f"capacity is {self.capacity.total_bytes} B")

    def fits(self, req: Request) -> bool:
        if self.capacity is None:
            return True
        return self.reserved + self.bytes_for(req) <= self.capacity.total_bytes

    def reserve(self, req: Request) -> None:
        self.reserved += self.bytes_for(req)
        self.peak = max(self.peak, self.reserved)

    def release(self, req: Request) -> None:
        self.reserved -= self.bytes_for(req)


class _Seq:
    """Mutable per-request simulation state."""

    __slots__ = ("req", "generated", "s_past", "remaining_prompt", "first_token_s")

    def __init__(self, req: Request):
        self.req = req
        self.generated = 0
        self.s_past = 0
        self.remaining_prompt = req.input_len
        self.first_token_s = 0.0


class _Engine:
    def __init__(self, trace, timer: _StepTimer, cap: _CapacityTracker):
        self.timer = timer
        self.cap = cap
        self.t = 0.0
        self.pending = sorted(trace, key=lambda r: (r.arrival_time_s, r.id))
        self.next_arrival = 0  # index into pending
        self.waiting: list[Request] = []
        self.records: list[RequestRecord] = []
        self.steps: list[StepRecord] = []
        self.generated_tokens = 0

    def pull_arrivals(self) -> None:
        while (self.next_arrival < len(self.pending)
               and self.pending[self.next_arrival].arrival_time_s <= self.t):
            self.waiting.append(self.pending[self.next_arrival])
            self.next_arrival += 1

    def has_future_arrivals(self) -> bool:
        return self.next_arrival < len(self.pending)

    def advance_to_next_arrival(self) -> None:
        self.t = max(self.t, self.pending[self.next_arrival].arrival_time_s)
        self.pull_arrivals()

    def log_step(self, start: float, kind: str, batch: int, tokens: int,
                 generated: int) -> None:
        self.generated_tokens += generated
        self.steps.append(StepRecord(start, self.t, kind, batch, tokens,
                                     generated, self.cap.reserved))

    def complete(self, seq: _Seq) -> None:
        self.records.append(RequestRecord(
            id=seq.req.id, arrival_s=seq.req.arrival_time_s,
            first_token_s=seq.first_token_s, completion_s=self.t,
            input_len=seq.req.input_len, output_len=seq.req.output_len))
        self.cap.release(seq.req)


def _run_static(policy: Static, eng: _Engine) -> None:
    while eng.next_arrival < len(eng.pending) or eng.waiting:
        eng.pull_arrivals()
        if not eng.waiting:
            eng.advance_to_next_arrival()
            continue
        # Fill the batch, waiting for stragglers unless the trace has no more
        # requests; stop early if the KV reservation budget is hit.
        batch: list[_Seq] = []
        while len(batch) < policy.batch_size:
            if not eng.waiting:
                if eng.has_future_arrivals():
                    eng.advance_to_next_arrival()
                    continue
                break  # trace exhausted: run the partial batch
            req = eng.waiting[0]
            eng.cap.require_feasible(req)
            if not eng.cap.fits(req) and batch:
                break
            eng.waiting.pop(0)
            eng.cap.reserve(req)
            seq = _Seq(req)
            batch.append(seq)
            eng.t = max(eng.t, req.arrival_time_s)

        m = len(batch)
        max_in = max(s.req.input_len for s in batch)
        max_out = max(s.req.output_len for s in batch)

        start = eng.t
        eng.t += eng.timer.prefill_s(m, max_in)
        for seq in batch:
            seq.generated = 1
            seq.first_token_s = eng.t
        eng.log_step(start, "prefill", m, sum(s.req.input_len for s in batch), m)
        for seq in batch:
            if seq.req.output_len == 1:
                eng.complete(seq)

        for k in range(1, max_out):
            s_past = max_in + k - 1
            start = eng.t
            eng.t += eng.timer.decode_s(m, s_past)
            producing = [s for s in batch if s.req.output_len >= k + 1]
            for seq in producing:
                seq.generated += 1
            eng.log_step(start, "decode", m, m, len(producing))
            for seq in producing:
                if seq.req.output_len == k + 1:
                    eng.complete(seq)


def _run_continuous(policy: Continuous, eng: _Engine) -> None:
    running: list[_Seq] = []
    while eng.next_arrival < len(eng.pending) or eng.waiting or running:
        eng.pull_arrivals()
        while eng.waiting and len(running) < policy.seq_limit:
            req = eng.waiting[0]
            eng.cap.require_feasible(req)
            if not eng.cap.fits(req):
                break
            eng.waiting.pop(0)
            eng.cap.reserve(req)
            running.append(_Seq(req))

        prefills = [s for s in running if s.remaining_prompt > 0]
        if prefills:
            seq = prefills[0]
            start = eng.t
            eng.t += eng.timer.prefill_s(1, seq.req.input_len)
            seq.remaining_prompt = 0
            seq.s_past = seq.req.input_len
            seq.generated = 1
            seq.first_token_s = eng.t
            eng.log_step(start, "prefill", 1, seq.req.input_len, 1)
            if seq.generated == seq.req.output_len:
                running.remove(seq)
                eng.complete(seq)
        elif running:
            b = len(running)
            s_past = max(s.s_past for s in running)
            start = eng.t
            eng.t += eng.timer.decode_s(b, s_past)
            for seq in running:
                seq.generated += 1
                seq.s_past += 1
            eng.log_step(start, "decode", b, b, b)
            for seq in [s for s in running if s.generated == s.req.output_len]:
                running.remove(seq)
                eng.complete(seq)
        else:
            eng.advance_to_next_arrival()


def _run_splitfuse(policy: SplitFuse, eng: _Engine) -> None:
    active: list[_Seq] = []
    while eng.next_arrival < len(eng.pending) or eng.waiting or active:
        eng.pull_arrivals()
        # One decode token per running sequence must fit in the budget, so cap
        # concurrent sequences at token_budget.
        while eng.waiting and len(active) < policy.token_budget:
            req = eng.waiting[0]
            eng.cap.require_feasible(req)
            if not eng.cap.fits(req):
                break
            eng.waiting.pop(0)
            eng.cap.reserve(req)
            active.append(_Seq(req))

        if not active:
            eng.advance_to_next_arrival()
            continue

        decoding = [s for s in active if s.remaining_prompt == 0]
        budget_left = policy.token_budget - len(decoding)
        chunks: list[tuple[_Seq, int]] = []
        for seq in active:
            if seq.remaining_prompt == 0 or budget_left == 0:
                continue
            chunk = min(seq.remaining_prompt, budget_left)
            chunks.append((seq, chunk))
            budget_left -= chunk

        tokens = len(decoding) + sum(c for _, c in chunks)
        start = eng.t
        eng.t += eng.timer.prefill_s(1, tokens)

        generated = 0
        finished: list[_Seq] = []
        for seq in decoding:
            seq.generated += 1
            seq.s_past += 1
            generated += 1
            if seq.generated == seq.req.output_len:
                finished.append(seq)
        for seq, chunk in chunks:
            seq.remaining_prompt -= chunk
            seq.s_past += chunk
            if seq.remaining_prompt == 0:
                seq.generated = 1
                seq.first_token_s = eng.t
                generated += 1
                if seq.req.output_len == 1:
                    finished.append(seq)
        eng.log_step(start, "mixed", len(decoding) + len(chunks), tokens, generated)
        for seq in finished:
            active.remove(seq)
            eng.complete(seq)


def run(policy: SchedulingPolicy, trace: list[Request], cfg: ModelConfig,
        coeffs: CoefficientPair | tuple[RegressionCoefficients, RegressionCoefficients],
        capacity: Optional[KvCapacity] = None, seed: int = 0) -> RunResult:
    """Simulate a trace under a policy; deterministic for fixed inputs.

    The event loop itself draws no randomness (arrival randomization lives in
    sweep_rates); seed is accepted for interface stability.
    """
    if not isinstance(coeffs, CoefficientPair):
        try:
            prefill, decode = coeffs
        except (TypeError, ValueError):
            raise MissingCoefficientError(
                "coeffs must be a CoefficientPair or a (prefill, decode) pair") from None
        coeffs = CoefficientPair(prefill, decode)

    timer = _StepTimer(cfg, coeffs)
    cap = _CapacityTracker(capacity, cfg)
    eng = _Engine(trace, timer, cap)
    if isinstance(policy, Static):
        _run_static(policy, eng)
    elif isinstance(policy, Continuous):
        _run_continuous(policy, eng)
    elif isinstance(policy, SplitFuse):
        _run_splitfuse(policy, eng)
    else:
        raise TypeError(f"unknown policy: {policy!r}")

    return RunResult(
        metrics=compute_metrics(eng.records),
        records=tuple(eng.records),
        steps=tuple(eng.steps),
        generated_tokens=eng.generated_tokens,
        peak_reserved_bytes=cap.peak,
        capacity_bytes=None if capacity is None else capacity.total_bytes,
    )


def trim_warmup(records, n: int = 100) -> tuple[list[RequestRecord], bool]:
    """Drop the first and last n completions; (records, warning) tuple.

    The warning flag is set when 2n or fewer records exist, in which case the
    trimmed list is empty.
    """
    ordered = sorted(records, key=lambda r: (r.completion_s, r.id))
    if len(ordered) <= 2 * n:
        return [], True
    return ordered[n:len(ordered) - n], False


def sweep_rates(policy: SchedulingPolicy, base_trace: list[Request], rates,
                cfg: ModelConfig, coeffs, capacity: Optional[KvCapacity] = None,
                seed: int = 0, arrival_process: str = "poisson",
                ) -> dict[float, ServingMetrics]:
    """Re-run the trace at each arrival rate; metrics are warmup-trimmed.

    Arrival offsets are drawn once per seed at unit rate (exponential gaps for
    poisson, constant gaps for uniform) and divided by each rate, so rates
    share randomness and differ only in time scale.
    """
    rates = [float(r) for r in rates]
    if any(r <= 0 for r in rates):
        raise ValueError("rates must be positive")
    if arrival_process == "poisson":
        gaps = np.random.default_rng(seed).exponential(1.0, size=len(base_trace))
    elif arrival_process == "uniform":
        gaps = np.ones(len(base_trace))
    else:
        raise ValueError(f"unknown arrival process {arrival_process!r}")
    unit_offsets = np.cumsum(gaps)

    out: dict[float, ServingMetrics] = {}
    for rate in rates:
        trace = [replace(req, arrival_time_s=float(offset / rate))
                 for req, offset in zip(base_trace, unit_offsets)]
        result = run(policy, trace, cfg, coeffs, capacity=capacity, seed=seed)
        trimmed, _ = trim_warmup(result.records)
        out[rate] = compute_metrics(trimmed)
    return out


METRICS_CSV_HEADER = ["policy", "rate", "token_throughput", "seq_throughput",
                      "mean_token_latency_s", "p50_latency_s", "p95_latency_s",
                      "completed"]


def write_metrics_csv(rows, out) -> None:
    """rows: iterable of (policy_label, rate, ServingMetrics). Full precision."""
    own = isinstance(out, (str, Path))
    fh = open(out, "w", newline="", encoding="utf-8") if own else out
    try:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_HEADER)
        for label, rate, m in rows:
            writer.writerow([label, repr(float(rate)), repr(m.token_throughput),
                             repr(m.seq_throughput), repr(m.mean_token_latency_s),
                             repr(m.p50_latency_s), repr(m.p95_latency_s),
                             m.completed])
    finally:
        if own:
            fh.close()


def metrics_csv_text(rows) -> str:
    buf = io.StringIO()
    write_metrics_csv(rows, buf)
    return buf.getvalue()


__all__ = [
    "Request", "Static", "Continuous", "SplitFuse", "SchedulingPolicy",
    "CoefficientPair", "KvCapacity", "RequestRecord", "StepRecord",
    "ServingMetrics", "RunResult", "CapacityError", "MissingCoefficientError",
    "run", "trim_warmup", "sweep_rates", "compute_metrics", "describe_policy",
    "write_metrics_csv", "metrics_csv_text", "METRICS_CSV_HEADER",
]

"""Analytical cost modeling and serving simulation for transformer inference.

The package answers three questions about a decoder-only transformer running
on a given accelerator, without touching a GPU:

* What does each operation cost? `costmodel` counts FLOPs and memory traffic
  per operation for the prefill and decode phases; `hardware` classifies each
  against a roofline (compute- vs memory-bound).
* How long will a step take? `estimator` fits a closed-form runtime model to
  measured step times and evaluates it at new batch/sequence points.
* How will a serving system behave? `kvsim` models KV-cache layouts and
  capacity; `servesim` simulates static, continuous, and split-fuse
  scheduling over request traces from `workload`.

The `infercost` console script exposes the same capabilities as subcommands.
"""

from .arch import (
    ConfigError,
    DimensionMismatchError,
    ModelConfig,
    NonPositiveFieldError,
    Phase,
    WorkloadPoint,
    load_model_config,
    model_preset,
    resolve_model,
    save_model_config,
    validate_config,
)
from .costmodel import (
    DECODE_OP_ORDER,
    LINEAR_PROJECTIONS,
    PREFILL_OP_ORDER,
    CacheLayout,
    ModelCost,
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
from .estimator import (
    FitResult,
    RankDeficientDesignError,
    RegressionCoefficients,
    TimingSample,
    UnderdeterminedSystemError,
    coeff_names,
    decode_features,
    features_for,
    fit,
    fit_design,
    load_coefficients,
    load_timing_samples,
    predict,
    predict_at,
    prefill_features,
    save_coefficients,
    save_timing_samples,
)
from .hardware import (
    BoundKind,
    DegenerateCostError,
    HardwareError,
    HardwareSpec,
    attainable_flops,
    classify,
    hardware_preset,
    load_hardware,
    lower_bound_time,
    resolve_hardware,
    ridge_point,
    save_hardware,
)
from .kvsim import (
    CacheStats,
    ReservedOverflowError,
    allocated_tokens,
    cache_step_bytes,
    footprint,
    max_concurrency,
)
from .servesim import (
    CapacityError,
    CoefficientPair,
    Continuous,
    KvCapacity,
    MissingCoefficientError,
    Request,
    RequestRecord,
    RunResult,
    SchedulingPolicy,
    ServingMetrics,
    SplitFuse,
    Static,
    StepRecord,
    compute_metrics,
    describe_policy,
    metrics_csv_text,
    run,
    sweep_rates,
    trim_warmup,
    write_metrics_csv,
)
from .workload import Scenario, generate, load_trace, save_trace

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # arch
    "ModelConfig", "Phase", "WorkloadPoint", "ConfigError",
    "DimensionMismatchError", "NonPositiveFieldError", "validate_config",
    "model_preset", "resolve_model", "load_model_config", "save_model_config",
    # costmodel
    "OpKind", "OpCost", "ModelCost", "PREFILL_OP_ORDER", "DECODE_OP_ORDER",
    "LINEAR_PROJECTIONS", "CacheLayout", "Vanilla", "Paged", "TokenGranular",
    "prefill_op_costs", "decode_op_costs", "aggregate", "kv_cache_bytes",
    # hardware
    "HardwareSpec", "BoundKind", "HardwareError", "DegenerateCostError",
    "ridge_point", "classify", "attainable_flops", "lower_bound_time",
    "hardware_preset", "resolve_hardware", "load_hardware", "save_hardware",
    # estimator
    "TimingSample", "RegressionCoefficients", "FitResult", "fit", "fit_design",
    "predict", "predict_at", "prefill_features", "decode_features",
    "features_for", "coeff_names", "UnderdeterminedSystemError",
    "RankDeficientDesignError", "load_timing_samples", "save_timing_samples",
    "load_coefficients", "save_coefficients",
    # kvsim
    "CacheStats", "ReservedOverflowError", "allocated_tokens",
    "cache_step_bytes", "footprint", "max_concurrency",
    # servesim
    "Request", "Static", "Continuous", "SplitFuse", "SchedulingPolicy",
    "CoefficientPair", "KvCapacity", "RequestRecord", "StepRecord",
    "ServingMetrics", "RunResult", "CapacityError", "MissingCoefficientError",
    "run", "trim_warmup", "sweep_rates", "compute_metrics",
    "describe_policy", "metrics_csv_text", "write_metrics_csv",
    # workload
    "Scenario", "generate", "save_trace", "load_trace",
]

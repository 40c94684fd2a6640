"""Linear runtime model: feature construction, least-squares fitting from
timing samples, and prediction.

Step time in milliseconds is modeled as a dot product of phase-specific
features with fitted coefficients:

  prefill: (b*s*h^2*l, b*s*h*h'*l, b*s^2*n*l, b*s*h*l, b*s*h'*l, 1)
           named (alpha, beta, gamma, eta, lambda, mu)
  decode:  (b*s*h*l, b*s*n*l, b*h*l, 1)
           named (phi, psi, omega, nu)

The intercept absorbs per-step fixed overhead (kernel launches, scheduler);
it may be negative (unconstrained OLS), so predictions for tiny workloads can
dip below zero — consumers that need a duration clamp at zero.

Samples taken at a single model config span at most three independent feature
directions (for fixed h, h', n, l several columns are proportional), so such
designs are rank-deficient by construction. fit() therefore defaults to the
minimum-norm least-squares solution and reports a condition warning;
strict_rank=True turns the warning into an error. Coefficients are only
individually identifiable from designs that vary the model dimensions — see
fit_design.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arch import DimensionMismatchError, ModelConfig, Phase, validate_config

RANK_RTOL = 1e-10  # singular-value ratio below which a direction is treated as null

PREFILL_COEFF_NAMES: tuple[str, ...] = ("alpha", "beta", "gamma", "eta", "lambda", "mu")
DECODE_COEFF_NAMES: tuple[str, ...] = ("phi", "psi", "omega", "nu")


class UnderdeterminedSystemError(ValueError):
    """Fewer samples than coefficients."""


class RankDeficientDesignError(ValueError):
    """The design matrix has numerically deficient rank (strict mode only)."""


@dataclass(frozen=True)
class TimingSample:
    """One measured configuration: total decoder-stack step time in ms."""

    phase: Phase
    b: int
    s: int
    measured_ms: float

    def __post_init__(self) -> None:
        if self.b < 1 or self.s < 1:
            raise ValueError(f"b and s must be >= 1, got b={self.b}, s={self.s}")
        if not self.measured_ms > 0:
            raise ValueError(f"measured_ms must be > 0, got {self.measured_ms}")


@dataclass(frozen=True)
class RegressionCoefficients:
    phase: Phase
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        expected = len(coeff_names(self.phase))
        if len(self.values) != expected:
            raise DimensionMismatchError(
                f"{self.phase.value} coefficients need {expected} values, "
                f"got {len(self.values)}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def named(self) -> dict[str, float]:
        return dict(zip(coeff_names(self.phase), self.values))


def coeff_names(phase: Phase) -> tuple[str, ...]:
    return PREFILL_COEFF_NAMES if phase is Phase.PREFILL else DECODE_COEFF_NAMES


def prefill_features(cfg: ModelConfig, b: int, s: int) -> tuple[float, ...]:
    validate_config(cfg)
    h, hf, n, l = cfg.hidden_size, cfg.intermediate_size, cfg.num_heads, cfg.num_layers
    return (float(b * s * h * h * l), float(b * s * h * hf * l),
            float(b * s * s * n * l), float(b * s * h * l),
            float(b * s * hf * l), 1.0)


def decode_features(cfg: ModelConfig, b: int, s: int) -> tuple[float, ...]:
    validate_config(cfg)
    h, n, l = cfg.hidden_size, cfg.num_heads, cfg.num_layers
    return (float(b * s * h * l), float(b * s * n * l), float(b * h * l), 1.0)


def features_for(cfg: ModelConfig, b: int, s: int, phase: Phase) -> tuple[float, ...]:
    if phase is Phase.PREFILL:
        return prefill_features(cfg, b, s)
    return decode_features(cfg, b, s)


def predict(coeffs: RegressionCoefficients, features) -> float:
    """Dot product of coefficients with a feature vector -> milliseconds."""
    features = tuple(features)
    if len(features) != len(coeffs.values):
        raise DimensionMismatchError(
            f"feature vector has {len(features)} entries, "
            f"{coeffs.phase.value} coefficients expect {len(coeffs.values)}")
    return float(sum(c * f for c, f in zip(coeffs.values, features)))


def predict_at(coeffs: RegressionCoefficients, cfg: ModelConfig, b: int, s: int) -> float:
    return predict(coeffs, features_for(cfg, b, s, coeffs.phase))


@dataclass(frozen=True)
class FitResult:
    coefficients: RegressionCoefficients
    rms_relative_error: float
    condition_warning: bool
    rank: int


def fit_design(X, y, *, strict_rank: bool = False) -> tuple[np.ndarray, int, bool]:
    """Minimum-norm OLS on an explicit design matrix.

    Columns are equilibrated to unit max-magnitude before the SVD so the rank
    test compares shapes, not units (raw feature columns span ~12 orders of
    magnitude). Returns (solution, rank, condition_warning).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"design {X.shape} incompatible with targets {y.shape}")
    n_samples, n_coeffs = X.shape
    if n_samples < n_coeffs:
        raise UnderdeterminedSystemError(
            f"{n_samples} samples cannot determine {n_coeffs} coefficients")

    scale = np.max(np.abs(X), axis=0)
    scale[scale == 0.0] = 1.0
    solution, _, rank, _ = np.linalg.lstsq(X / scale, y, rcond=RANK_RTOL)
    deficient = rank < n_coeffs
    if deficient and strict_rank:
        raise RankDeficientDesignError(
            f"design matrix rank {rank} < {n_coeffs} "
            f"(singular-value ratio below {RANK_RTOL:g})")
    return solution / scale, int(rank), bool(deficient)


def fit(samples: list[TimingSample], cfg: ModelConfig, phase: Phase,
        *, strict_rank: bool = False) -> FitResult:
    """Ordinary least squares over timing samples for one phase."""
    if not samples:
        raise UnderdeterminedSystemError("no samples")
    bad = [s for s in samples if s.phase is not phase]
    if bad:
        raise ValueError(f"{len(bad)} samples have phase != {phase.value}")

    X = np.array([features_for(cfg, s.b, s.s, phase) for s in samples], dtype=float)
    y = np.array([s.measured_ms for s in samples], dtype=float)
    solution, rank, warned = fit_design(X, y, strict_rank=strict_rank)

    residual_rel = (X @ solution - y) / y
    rms = float(np.sqrt(np.mean(residual_rel ** 2)))
    coeffs = RegressionCoefficients(phase, tuple(solution))
    return FitResult(coeffs, rms, warned, rank)


# --- file formats -----------------------------------------------------------

def load_timing_samples(path: str | Path) -> list[TimingSample]:
    """Read the `phase,b,s,time_ms` CSV."""
    samples: list[TimingSample] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["phase", "b", "s", "time_ms"]
        if reader.fieldnames != expected:
            raise ValueError(f"{path}: header must be {','.join(expected)}, "
                             f"got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                samples.append(TimingSample(Phase(row["phase"]), int(row["b"]),
                                            int(row["s"]), float(row["time_ms"])))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    return samples


def save_timing_samples(samples: list[TimingSample], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phase", "b", "s", "time_ms"])
        for s in samples:
            writer.writerow([s.phase.value, s.b, s.s, repr(s.measured_ms)])


def coefficients_to_dict(coeffs: RegressionCoefficients) -> dict:
    return {"phase": coeffs.phase.value, **coeffs.named()}


def coefficients_from_dict(data: dict) -> RegressionCoefficients:
    if "phase" not in data:
        raise ValueError("coefficients object needs a 'phase' key")
    phase = Phase(data["phase"])
    names = coeff_names(phase)
    missing = [n for n in names if n not in data]
    if missing:
        raise ValueError(f"missing {phase.value} coefficients: {', '.join(missing)}")
    return RegressionCoefficients(phase, tuple(float(data[n]) for n in names))


def load_coefficients(path: str | Path) -> RegressionCoefficients:
    with open(path, encoding="utf-8") as fh:
        return coefficients_from_dict(json.load(fh))


def save_coefficients(coeffs: RegressionCoefficients, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(coefficients_to_dict(coeffs), fh, indent=2)
        fh.write("\n")


__all__ = [
    "TimingSample", "RegressionCoefficients", "FitResult",
    "UnderdeterminedSystemError", "RankDeficientDesignError",
    "PREFILL_COEFF_NAMES", "DECODE_COEFF_NAMES", "coeff_names",
    "prefill_features", "decode_features", "features_for",
    "predict", "predict_at", "fit", "fit_design",
    "load_timing_samples", "save_timing_samples",
    "coefficients_to_dict", "coefficients_from_dict",
    "load_coefficients", "save_coefficients",
]

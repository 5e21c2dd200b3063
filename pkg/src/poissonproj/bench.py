"""Monte Carlo harness: replicated selection runs, quantile bands, rate calculus."""

from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .basis import BasisFamily, Model, ModelCollection, default_collection
from .estimator import Quadrature, evaluate, l2_error_sq, true_coefficients
from .sampler import (
    CovariateKind,
    CovariateProcessSpec,
    IntensityFunction,
    intensity_from_id,
    simulate_dataset,
    stream_seed,
)
from .selection import PenaltySpec, PenaltyVariant, select_model

PAPER_PENALTY = PenaltySpec(PenaltyVariant.PRACTICAL, xi=10.0, kappa=0.09)
BAND_PROBS = (0.01, 0.25, 0.50, 0.75, 0.99)
DEFAULT_SEED = 20170317


@dataclass(frozen=True)
class BenchmarkConfig:
    """One cell of a simulation table.

    ``model_indices`` overrides the default collection for the family
    (a single index turns selection into a fixed-model fit).
    """

    n: int
    replicates: int = 500
    covariates: CovariateProcessSpec = CovariateProcessSpec()
    intensity: str = "paper"
    family: BasisFamily = BasisFamily.DYADIC_HISTOGRAM
    penalty: PenaltySpec = PAPER_PENALTY
    master_seed: int = DEFAULT_SEED
    panels: int = 4096
    model_indices: Optional[tuple] = None

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if int(self.replicates) < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not isinstance(self.family, BasisFamily):
            object.__setattr__(self, "family", BasisFamily(self.family))
        if self.model_indices is not None:
            object.__setattr__(self, "model_indices", tuple(int(m) for m in self.model_indices))
        intensity_from_id(self.intensity)
        Quadrature(panels=self.panels)

    def collection(self) -> ModelCollection:
        if self.model_indices is None:
            return default_collection(self.family, self.n)
        return ModelCollection(self.family, self.model_indices, self.n)

    def truth(self) -> IntensityFunction:
        return intensity_from_id(self.intensity)

    def to_dict(self) -> dict:
        pen = {k: v for k, v in asdict(self.penalty).items() if v is not None}
        pen["variant"] = self.penalty.variant.value
        return {
            "n": self.n,
            "replicates": self.replicates,
            "design": self.covariates.kind.value,
            "ar_coefficient": self.covariates.ar_coefficient,
            "noise_sd": self.covariates.noise_sd,
            "intensity": self.intensity,
            "family": self.family.value,
            "penalty": pen,
            "master_seed": self.master_seed,
            "panels": self.panels,
            "model_indices": list(self.model_indices) if self.model_indices else None,
        }


class ReplicateRecord(NamedTuple):
    r: int
    seed: int
    error: float
    chosen_m: int


def run_replicate(config: BenchmarkConfig, r: int) -> ReplicateRecord:
    """Simulate on stream ``r``, select a model, measure the squared L² error."""
    seed = stream_seed(config.master_seed, r)
    truth = config.truth()
    sample = simulate_dataset(truth, config.covariates, config.n, seed)
    result = select_model(sample, config.collection(), config.penalty)
    err = l2_error_sq(result.estimate, truth, Quadrature(panels=config.panels))
    return ReplicateRecord(int(r), seed, err, result.chosen_index)


def _run_chunk(config: BenchmarkConfig, indices: Sequence[int]) -> List[ReplicateRecord]:
    return [run_replicate(config, r) for r in indices]


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit count, else POISSONPROJ_THREADS, else the CPU count."""
    env = os.environ.get("POISSONPROJ_THREADS")
    if env:
        workers = int(env)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def _map_replicates(config, fn, workers):
    indices = list(range(config.replicates))
    if workers == 1 or config.replicates == 1:
        return fn(config, indices)
    chunks = [indices[k::workers] for k in range(workers) if indices[k::workers]]
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(fn, [config] * len(chunks), chunks))
    out = [item for part in parts for item in part]
    # reassemble in replicate order so the reduction never depends on scheduling
    return [item for _, item in sorted(zip([i for c in chunks for i in c], out))]


@dataclass(frozen=True)
class BenchmarkReport:
    config: BenchmarkConfig
    records: List[ReplicateRecord] = field(repr=False)

    @property
    def errors(self) -> np.ndarray:
        return np.array([rec.error for rec in self.records])

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def sd_error(self) -> float:
        if len(self.records) < 2:
            return 0.0
        return float(np.std(self.errors, ddof=1))

    @property
    def chosen_histogram(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for rec in self.records:
            counts[rec.chosen_m] = counts.get(rec.chosen_m, 0) + 1
        return dict(sorted(counts.items()))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "mean_error": self.mean_error,
            "sd_error": self.sd_error,
            "chosen_histogram": {str(k): v for k, v in self.chosen_histogram.items()},
            "records": [rec._asdict() for rec in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def run_benchmark(config: BenchmarkConfig, workers: Optional[int] = None) -> BenchmarkReport:
    records = _map_replicates(config, _run_chunk, resolve_workers(workers))
    return BenchmarkReport(config, records)


@dataclass(frozen=True)
class QuantileBand:
    grid: np.ndarray
    values: np.ndarray  # (len(probs), len(grid))
    probs: tuple = BAND_PROBS

    def band(self, p: float) -> np.ndarray:
        return self.values[self.probs.index(p)]

    def to_csv(self) -> str:
        header = "x," + ",".join(f"q{round(p * 100):02d}" for p in self.probs)
        lines = [header]
        for k, x in enumerate(self.grid):
            row = [x, *self.values[:, k]]
            lines.append(",".join(format(float(v), ".17g") for v in row))
        return "\n".join(lines) + "\n"


def _band_chunk(args, indices):
    config, grid = args
    truth = config.truth()
    out = []
    for r in indices:
        sample = simulate_dataset(truth, config.covariates, config.n, stream_seed(config.master_seed, r))
        est = select_model(sample, config.collection(), config.penalty).estimate
        out.append(evaluate(est, grid))
    return out


def quantile_bands(
    config: BenchmarkConfig, resolution: int = 513, workers: Optional[int] = None
) -> QuantileBand:
    """Pointwise empirical quantiles of the selected estimates over replicates."""
    if config.replicates < 2:
        raise ValueError("quantile bands need at least 2 replicates")
    if resolution < 2:
        raise ValueError("grid resolution must be >= 2")
    grid = np.linspace(0.0, 1.0, resolution)
    workers = resolve_workers(workers)
    indices = list(range(config.replicates))
    if workers == 1:
        curves = _band_chunk((config, grid), indices)
    else:
        chunks = [indices[k::workers] for k in range(workers) if indices[k::workers]]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_band_chunk, [(config, grid)] * len(chunks), chunks))
        order = [i for c in chunks for i in c]
        flat = [curve for part in parts for curve in part]
        curves = [curve for _, curve in sorted(zip(order, flat), key=lambda t: t[0])]
    values = np.quantile(np.vstack(curves), BAND_PROBS, axis=0)
    return QuantileBand(grid, values)


class GammaKind(enum.Enum):
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class SobolevSpec:
    """Ellipsoid weights γ_j = |j|^p or exp(p|j|), γ_0 = 1, and radius R."""

    kind: GammaKind
    p: float
    radius: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, GammaKind):
            object.__setattr__(self, "kind", GammaKind(self.kind))
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if self.kind is GammaKind.POLYNOMIAL and not self.p > 0.5:
            raise ValueError("polynomial weights need p > 1/2 for a summable Σ γ_j^-2")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def inv_gamma_sq(self, k: int) -> float:
        """γ_k^-2."""
        if k == 0:
            return 1.0
        if self.kind is GammaKind.POLYNOMIAL:
            return float(k) ** (-2.0 * self.p)
        return math.exp(-2.0 * self.p * k)


class MinimaxRate(NamedTuple):
    m_opt: int
    psi_n: float


def minimax_rate(spec: SobolevSpec, n: int) -> MinimaxRate:
    """m* = argmin_k max(γ_k^-2, (2k+1)/n) and Ψ_n at m*.

    Forward scan; stops once the variance branch alone exceeds the best value.
    Ties keep the smaller k.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    best_k, best = 0, max(1.0, 1.0 / n)
    k = 1
    while (2 * k + 1) / n <= best:
        value = max(spec.inv_gamma_sq(k), (2 * k + 1) / n)
        if value < best:
            best_k, best = k, value
        k += 1
    return MinimaxRate(best_k, best)


def oracle_index(
    family: BasisFamily, truth: IntensityFunction, n: int, quad: Optional[Quadrature] = None
) -> int:
    """Model index minimizing ||λ - λ_m||² + D_m (||λ||² + ||λ||_1)/n over the default collection."""
    quad = quad or Quadrature()
    norm_sq = truth.l2_norm_sq
    if norm_sq is None:
        norm_sq = quad.integrate(lambda x: truth(x) ** 2, truth.breakpoints)
    l1 = truth.l1_norm
    if l1 is None:
        l1 = quad.integrate(truth, truth.breakpoints)
    best_m, best = None, math.inf
    for m in default_collection(family, n).indices:
        model = Model(family, m)
        variance = model.dimension * (norm_sq + l1) / n
        if variance > best:
            break
        theta = true_coefficients(model, truth, quad)
        bias = max(norm_sq - float(theta @ theta), 0.0)
        if bias + variance < best:
            best_m, best = m, bias + variance
    return best_m


def loglog_slope(ns: Sequence[float], errors: Sequence[float]) -> float:
    """Ordinary least-squares slope of ln(error) on ln(n)."""
    slope, _ = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


@dataclass(frozen=True)
class RateStudy:
    ns: tuple
    mean_errors: tuple
    chosen: tuple
    slope: float

    def to_dict(self) -> dict:
        return {
            "ns": list(self.ns),
            "mean_errors": list(self.mean_errors),
            "model_indices": list(self.chosen),
            "slope": self.slope,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def rate_study(
    family: BasisFamily,
    intensity: str,
    ns: Sequence[int],
    replicates: int,
    penalty: PenaltySpec = PAPER_PENALTY,
    *,
    oracle: bool = False,
    model_indices: Optional[tuple] = None,
    covariates: CovariateProcessSpec = CovariateProcessSpec(),
    master_seed: int = DEFAULT_SEED,
    workers: Optional[int] = None,
    runner: Callable[..., BenchmarkReport] = run_benchmark,
) -> RateStudy:
    """Mean squared L² error at each n and its log-log slope.

    ``oracle`` replaces selection by the fixed model balancing the true
    squared bias against the variance bound at each n.
    """
    ns = tuple(int(n) for n in ns)
    if len(ns) < 3 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be strictly increasing with at least 3 entries")
    truth = intensity_from_id(intensity)
    errors, chosen = [], []
    for n in ns:
        indices = model_indices
        if oracle:
            indices = (oracle_index(BasisFamily(family), truth, n),)
        config = BenchmarkConfig(
            n=n,
            replicates=replicates,
            covariates=covariates,
            intensity=intensity,
            family=family,
            penalty=penalty,
            master_seed=master_seed,
            model_indices=indices,
        )
        report = runner(config, workers)
        errors.append(report.mean_error)
        chosen.append(indices[0] if indices and len(indices) == 1 else None)
    return RateStudy(ns, tuple(errors), tuple(chosen), loglog_slope(ns, errors))


def paper_config(n: int, kappa: float = 0.09, dependent: bool = False, **kw) -> BenchmarkConfig:
    """Simulation-table cell: paper intensity, dyadic histograms, practical penalty ξ² = 100."""
    kind = CovariateKind.MIXING_AR if dependent else CovariateKind.IID_UNIFORM
    log_base = kw.pop("log_base", 2.0)
    penalty = PenaltySpec(PenaltyVariant.PRACTICAL, xi=10.0, kappa=kappa, log_base=log_base)
    return BenchmarkConfig(n=n, covariates=CovariateProcessSpec(kind), penalty=penalty, **kw)

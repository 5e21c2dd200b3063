"""Penalties, the plug-in sup-norm estimate, and penalized-contrast selection."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .basis import Model, ModelCollection
from .estimator import ProjectionEstimate, contrast, fit_projection
from .sampler import Sample

ModelOrDim = Union[Model, int]


def _dim(model: ModelOrDim) -> int:
    d = model.dimension if isinstance(model, Model) else int(model)
    if d < 1:
        raise ValueError(f"model dimension must be >= 1, got {d}")
    return d


def _check_n(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n


def pen_known_xi(model: ModelOrDim, n: int, xi: float, phi: float = 1.0) -> float:
    """24 μ Φ² D/n + 400 μ Φ² D log(n+2)/n with μ = max(1, ξ²)."""
    n = _check_n(n)
    if xi < 0:
        raise ValueError(f"xi must be >= 0, got {xi}")
    mu = max(1.0, xi * xi)
    scale = mu * phi * phi * _dim(model) / n
    return 24.0 * scale + 400.0 * scale * math.log(n + 2)


def _check_mu(mu_hat: float) -> float:
    if not mu_hat >= 1.0:
        raise ValueError(f"mu_hat must be >= 1 (it is max(1, ||λ̂_Π||²_∞)), got {mu_hat}")
    return float(mu_hat)


def pen_plugin(model: ModelOrDim, n: int, mu_hat: float, phi: float = 1.0) -> float:
    """384 μ̂ Φ² D/n + 6400 μ̂ Φ² D log(n+2)/n."""
    n = _check_n(n)
    scale = _check_mu(mu_hat) * phi * phi * _dim(model) / n
    return 384.0 * scale + 6400.0 * scale * math.log(n + 2)


def pen_dependent(model: ModelOrDim, n: int, mu_hat: float, phi: float = 1.0) -> float:
    """D log(n+2)/n + 6400 μ̂ Φ² D log(n+2)/n."""
    n = _check_n(n)
    d = _dim(model)
    mu_hat = _check_mu(mu_hat)
    log_term = math.log(n + 2) / n
    return d * log_term + 6400.0 * mu_hat * phi * phi * d * log_term


def pen_practical(
    model: ModelOrDim, n: int, xi: float, kappa: float, log_base: float = math.e
) -> float:
    """κ D ξ² log(n)/n; ``log_base`` selects the logarithm (natural by default)."""
    n = int(n)
    if n < 2:
        raise ValueError(f"the practical penalty needs n >= 2, got {n}")
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if not (log_base > 0 and log_base != 1):
        raise ValueError(f"invalid log base {log_base}")
    return kappa * _dim(model) * xi * xi * math.log(n, log_base) / n


@dataclass(frozen=True)
class Partition:
    """Partition of [0, 1] into M intervals; ``measures`` are their design probabilities."""

    edges: np.ndarray

    def __post_init__(self):
        edges = np.array(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or edges[0] != 0.0 or edges[-1] != 1.0:
            raise ValueError("partition edges must run from 0 to 1")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("partition edges must be strictly increasing")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def M(self) -> int:
        return self.edges.size - 1

    @property
    def measures(self) -> np.ndarray:
        return np.diff(self.edges)

    def satisfies_lower_bound(self, c_pi: float = 1.0) -> bool:
        """Every cell has probability >= c_Π / M (up to rounding)."""
        return bool(np.all(self.measures >= c_pi / self.M * (1 - 1e-12)))

    def locate(self, x) -> np.ndarray:
        idx = np.searchsorted(self.edges, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.M - 1)


def uniform_partition(M: int) -> Partition:
    M = int(M)
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    edges = np.arange(M + 1) / M
    return Partition(edges)


def default_partition(n: int, dependent: bool = False, strict: bool = False) -> Partition:
    """Uniform partition sized by n.

    ``strict`` uses the theoretical caps n/(320 ln n) (independent) and
    n^(1/3)/(320 ln n) (dependent), which are below 1 for any desk-scale n;
    the default uses floor(n^(1/3)).
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if strict:
        top = (n ** (1.0 / 3.0) if dependent else n) / (320.0 * math.log(n))
        M = max(1, math.floor(top))
    else:
        M = max(1, _icbrt(n))
    return uniform_partition(M)


def _icbrt(n: int) -> int:
    r = round(n ** (1.0 / 3.0))
    while r**3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return r


@dataclass(frozen=True)
class PluginFit:
    """Histogram estimate λ̂_Π on a partition and μ̂ = max(1, ||λ̂_Π||²_∞)."""

    partition: Partition
    cell_values: np.ndarray
    mu_hat: float

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.cell_values)))

    def __call__(self, x):
        return self.cell_values[self.partition.locate(x)]


def fit_plugin_mu(sample: Sample, partition: Partition) -> PluginFit:
    """Cell value j = Σ_i y_i 1{x_i in cell j} / (n P(cell j))."""
    n = sample.n
    if n == 0:
        raise ValueError("cannot fit the plug-in estimator to an empty sample")
    sums = np.bincount(partition.locate(sample.xs), weights=sample.ys, minlength=partition.M)
    values = sums / (n * partition.measures)
    sup = float(np.max(np.abs(values)))
    return PluginFit(partition, values, max(1.0, sup * sup))


class PenaltyVariant(enum.Enum):
    KNOWN_XI = "known-xi"
    PLUGIN = "plugin"
    DEPENDENT = "dependent"
    PRACTICAL = "practical"


_ALLOWED = {
    PenaltyVariant.KNOWN_XI: {"xi"},
    PenaltyVariant.PLUGIN: {"cells", "strict_partition"},
    PenaltyVariant.DEPENDENT: {"cells", "strict_partition"},
    PenaltyVariant.PRACTICAL: {"xi", "kappa", "log_base"},
}
_REQUIRED = {
    PenaltyVariant.KNOWN_XI: {"xi"},
    PenaltyVariant.PLUGIN: set(),
    PenaltyVariant.DEPENDENT: set(),
    PenaltyVariant.PRACTICAL: {"xi", "kappa"},
}


@dataclass(frozen=True)
class PenaltySpec:
    """One of the four penalty rules plus its constants.

    ``cells`` fixes the plug-in partition size M; when unset the partition
    comes from :func:`default_partition` (``strict_partition`` selects the
    theoretical size).
    """

    variant: PenaltyVariant
    xi: Optional[float] = None
    kappa: Optional[float] = None
    cells: Optional[int] = None
    strict_partition: Optional[bool] = None
    log_base: Optional[float] = None
    phi: float = 1.0

    def __post_init__(self):
        if not isinstance(self.variant, PenaltyVariant):
            object.__setattr__(self, "variant", PenaltyVariant(self.variant))
        given = {
            name
            for name in ("xi", "kappa", "cells", "strict_partition", "log_base")
            if getattr(self, name) is not None
        }
        extra = given - _ALLOWED[self.variant]
        if extra:
            raise ValueError(f"{sorted(extra)} not used by the {self.variant.value} penalty")
        missing = _REQUIRED[self.variant] - given
        if missing:
            raise ValueError(f"the {self.variant.value} penalty needs {sorted(missing)}")
        if self.xi is not None and self.xi < 0:
            raise ValueError(f"xi must be >= 0, got {self.xi}")
        if self.kappa is not None and not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.cells is not None and self.cells < 1:
            raise ValueError(f"cells must be >= 1, got {self.cells}")

    @property
    def needs_plugin(self) -> bool:
        return self.variant in (PenaltyVariant.PLUGIN, PenaltyVariant.DEPENDENT)

    def partition_for(self, n: int) -> Partition:
        if self.cells is not None:
            return uniform_partition(self.cells)
        return default_partition(
            n,
            dependent=self.variant is PenaltyVariant.DEPENDENT,
            strict=bool(self.strict_partition),
        )

    def value(self, model: ModelOrDim, n: int, mu_hat: Optional[float] = None) -> float:
        v = self.variant
        if v is PenaltyVariant.KNOWN_XI:
            return pen_known_xi(model, n, self.xi, self.phi)
        if v is PenaltyVariant.PRACTICAL:
            base = math.e if self.log_base is None else self.log_base
            return pen_practical(model, n, self.xi, self.kappa, base)
        if mu_hat is None:
            raise ValueError(f"the {v.value} penalty needs mu_hat")
        if v is PenaltyVariant.PLUGIN:
            return pen_plugin(model, n, mu_hat, self.phi)
        return pen_dependent(model, n, mu_hat, self.phi)


@dataclass(frozen=True)
class CriterionRow:
    index: int
    dimension: int
    contrast: float
    penalty: float
    criterion: float


@dataclass(frozen=True)
class SelectionResult:
    chosen_index: int
    table: List[CriterionRow]
    estimate: ProjectionEstimate
    mu_hat: Optional[float] = None
    plugin: Optional[PluginFit] = field(default=None, repr=False)

    @property
    def chosen_dimension(self) -> int:
        return self.estimate.model.dimension


def select_model(
    sample: Sample,
    collection: ModelCollection,
    spec: PenaltySpec,
    partition: Optional[Partition] = None,
) -> SelectionResult:
    """argmin over the collection of Υ_n(λ̂_m) + pen(m).

    Ties go to the smallest dimension, then the smallest index.
    """
    if len(collection) == 0:
        raise ValueError("empty model collection")
    n = sample.n
    plugin = None
    mu_hat = None
    if spec.needs_plugin:
        plugin = fit_plugin_mu(sample, partition or spec.partition_for(n))
        mu_hat = plugin.mu_hat
    estimates = [fit_projection(sample, model) for model in collection.models]
    biggest = max(estimates, key=lambda e: (e.model.dimension, e.model.index))
    table = []
    for est in estimates:
        c = contrast(est, biggest)
        p = spec.value(est.model, n, mu_hat)
        table.append(CriterionRow(est.model.index, est.model.dimension, c, p, c + p))
    best = min(range(len(table)), key=lambda k: (table[k].criterion, table[k].dimension, table[k].index))
    return SelectionResult(table[best].index, table, estimates[best], mu_hat, plugin)

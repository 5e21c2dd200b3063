"""Projection estimators, the contrast, and L² losses against a known intensity."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .basis import BasisFamily, Model, cell_index
from .sampler import IntensityFunction, Sample


@dataclass(frozen=True)
class ProjectionEstimate:
    """λ̂_m = Σ_η θ̂_η φ_η, coefficients in ``model.etas`` order."""

    model: Model
    coefficients: np.ndarray
    n: int

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float)
        if coef.shape != (self.model.dimension,):
            raise ValueError(
                f"expected {self.model.dimension} coefficients, got shape {coef.shape}"
            )
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    def coefficient(self, eta: int) -> float:
        return float(self.coefficients[self.model.position(eta)])

    def __call__(self, x):
        return evaluate(self, x)

    def breakpoints(self) -> tuple:
        """Points where the estimate may jump (cell edges for histograms)."""
        if self.model.family is BasisFamily.DYADIC_HISTOGRAM and self.model.index > 0:
            d = self.model.dimension
            return tuple(k / d for k in range(1, d))
        return ()


def fit_projection(sample: Sample, model: Model) -> ProjectionEstimate:
    """θ̂_η = (1/n) Σ_i y_i φ_η(x_i)."""
    n = sample.n
    if n == 0:
        raise ValueError("cannot fit a projection estimator to an empty sample")
    if model.family is BasisFamily.DYADIC_HISTOGRAM:
        d = model.dimension
        sums = np.bincount(cell_index(sample.xs, model.index), weights=sample.ys, minlength=d)
        coef = sums * (math.sqrt(d) / n)
    else:
        coef = sample.ys @ model.design_matrix(sample.xs) / n
    return ProjectionEstimate(model, coef, n)


def evaluate(estimate: ProjectionEstimate, x):
    """Basis expansion at ``x`` (scalar or array) in [0, 1]."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((xs < 0.0) | (xs > 1.0)) or not np.all(np.isfinite(xs)):
        raise ValueError("x must lie in [0, 1]")
    model = estimate.model
    if model.family is BasisFamily.DYADIC_HISTOGRAM:
        values = estimate.coefficients[cell_index(xs, model.index)] * math.sqrt(model.dimension)
    else:
        values = model.design_matrix(xs) @ estimate.coefficients
    return float(values[0]) if scalar else values


def cell_values(estimate: ProjectionEstimate) -> np.ndarray:
    """Step heights of a histogram estimate."""
    if estimate.model.family is not BasisFamily.DYADIC_HISTOGRAM:
        raise ValueError("cell values are only defined for histogram estimates")
    return estimate.coefficients * math.sqrt(estimate.model.dimension)


def contrast(estimate: ProjectionEstimate, max_estimate: ProjectionEstimate) -> float:
    """Υ_n(λ̂_m) = ||λ̂_m||² - 2 <λ̂_n, λ̂_m>, evaluated in coefficient space.

    ``max_estimate`` is the estimate on the largest model of the collection.
    For nested estimates fitted on the same sample this equals -Σ θ̂_η².
    """
    small, big = estimate.model, max_estimate.model
    if not big.contains(small):
        raise ValueError(f"model {small} is not nested in {big}")
    theta = estimate.coefficients
    if small.family is BasisFamily.TRIGONOMETRIC:
        cross = float(theta @ max_estimate.coefficients[: small.dimension])
    else:
        # coarse cell j is the union of 2**k consecutive fine cells:
        # φ_j = (Σ φ_fine) / sqrt(2**k)
        ratio = big.dimension // small.dimension
        grouped = max_estimate.coefficients.reshape(small.dimension, ratio).sum(axis=1)
        cross = float(theta @ grouped) / math.sqrt(ratio)
    return float(theta @ theta) - 2.0 * cross


class QuadratureRule(enum.Enum):
    COMPOSITE_SIMPSON = "simpson"


@dataclass(frozen=True)
class Quadrature:
    """Composite Simpson on [0, 1] with panel edges forced onto given breakpoints."""

    rule: QuadratureRule = QuadratureRule.COMPOSITE_SIMPSON
    panels: int = 4096

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2:
            raise ValueError(f"panels must be a positive even integer, got {self.panels}")

    def nodes_weights(self, breakpoints: Iterable[float] = ()) -> tuple:
        """Nodes and weights; endpoints of each piece are nudged one ulp inward.

        The nudge makes a function with a jump at a breakpoint contribute its
        one-sided limit on each side.
        """
        edges = sorted({0.0, 1.0, *(float(b) for b in breakpoints if 0.0 < b < 1.0)})
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(2, int(round(self.panels * (b - a))))
            k += k % 2
            x = np.linspace(a, b, k + 1)
            x[0] = np.nextafter(a, b)
            x[-1] = np.nextafter(b, a)
            w = np.full(k + 1, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            nodes.append(x)
            weights.append(w * (b - a) / (3.0 * k))
        return np.concatenate(nodes), np.concatenate(weights)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray], breakpoints=()) -> float:
        x, w = self.nodes_weights(breakpoints)
        return float(np.asarray(f(x), dtype=float) @ w)


DEFAULT_QUADRATURE = Quadrature()


def l2_error_sq(
    estimate: ProjectionEstimate,
    truth: IntensityFunction,
    quad: Optional[Quadrature] = None,
) -> float:
    """∫_0^1 (λ̂(x) - λ(x))² dx by composite Simpson."""
    quad = quad or DEFAULT_QUADRATURE
    breaks = set(truth.breakpoints) | set(estimate.breakpoints())
    value = quad.integrate(lambda x: (evaluate(estimate, x) - truth(x)) ** 2, breaks)
    return max(value, 0.0)


def l2_norm_sq(f: Callable, breakpoints=(), quad: Optional[Quadrature] = None) -> float:
    quad = quad or DEFAULT_QUADRATURE
    return quad.integrate(lambda x: np.asarray(f(x), dtype=float) ** 2, breakpoints)


def true_coefficients(
    model: Model, truth: IntensityFunction, quad: Optional[Quadrature] = None
) -> np.ndarray:
    """θ_η = ∫ λ φ_η by quadrature: the coefficients of the projection λ_m."""
    quad = quad or DEFAULT_QUADRATURE
    breaks = set(truth.breakpoints)
    if model.family is BasisFamily.DYADIC_HISTOGRAM:
        breaks |= {k / model.dimension for k in range(1, model.dimension)}
    x, w = quad.nodes_weights(breaks)
    return (truth(x) * w) @ model.design_matrix(x)


def projection_of(
    model: Model, truth: IntensityFunction, quad: Optional[Quadrature] = None
) -> ProjectionEstimate:
    """λ_m as an estimate object (n = 0 marks it as non-empirical)."""
    return ProjectionEstimate(model, true_coefficients(model, truth, quad), 0)


def sup_norm(estimate: ProjectionEstimate, resolution: int = 4096) -> float:
    """Exact for histograms, uniform-grid maximum for trigonometric estimates."""
    if resolution < 2:
        raise ValueError("grid resolution must be >= 2")
    if estimate.model.family is BasisFamily.DYADIC_HISTOGRAM:
        return float(np.max(np.abs(cell_values(estimate))))
    grid = np.linspace(0.0, 1.0, resolution)
    return float(np.max(np.abs(evaluate(estimate, grid))))

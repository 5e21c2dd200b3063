"""Synthetic data for Poisson regression: intensities, covariate processes, samples.

All generators are pure functions of their inputs and an explicit seed (or a
``numpy.random.Generator`` owned by the caller).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

SeedLike = Union[int, np.integer, np.random.Generator]


def make_rng(seed: SeedLike, stream: Optional[int] = None) -> np.random.Generator:
    """Return a generator for ``seed``, optionally on an independent sub-stream.

    Sub-streams use ``SeedSequence`` spawn keys, so stream ``r`` of a master
    seed does not depend on which other streams were drawn or in what order.
    """
    if isinstance(seed, np.random.Generator):
        if stream is not None:
            raise ValueError("cannot derive a stream from an existing Generator")
        return seed
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if stream is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(stream),)))


def stream_seed(master_seed: int, stream: int) -> int:
    """64-bit seed of sub-stream ``stream`` of ``master_seed`` (counter-based split)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class IntensityFunction:
    """A non-negative intensity on [0, 1] with optional closed-form norms.

    ``breakpoints`` lists interior points where the function may jump; the
    quadrature splits its panels there.
    """

    func: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    sup_norm: Optional[float] = None
    l2_norm_sq: Optional[float] = None
    l1_norm: Optional[float] = None
    breakpoints: tuple = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        values = np.asarray(self.func(x), dtype=float)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError(f"intensity {self.name!r} produced negative or non-finite values")
        return values if values.ndim else float(values)


def _paper_lambda(x):
    return np.where(x <= 0.5, 5.0 + 5.0 * np.cos(2.0 * np.pi * x), 10.0 * x)


def test_intensity() -> IntensityFunction:
    """(5 + 5 cos 2πx) on [0, 1/2] and 10x on (1/2, 1]; jumps from 0 to 5 at 1/2."""
    # int_0^.5 (5+5cos)^2 = 18.75, int_.5^1 100x^2 = 175/6
    # int_0^.5 (5+5cos) = 2.5, int_.5^1 10x = 3.75
    return IntensityFunction(
        func=_paper_lambda,
        name="paper",
        sup_norm=10.0,
        l2_norm_sq=18.75 + 175.0 / 6.0,
        l1_norm=6.25,
        breakpoints=(0.5,),
    )


# pytest would otherwise try to collect the public name above
test_intensity.__test__ = False


def constant_intensity(c: float) -> IntensityFunction:
    c = float(c)
    if c < 0 or not math.isfinite(c):
        raise ValueError(f"constant intensity must be finite and >= 0, got {c}")
    return IntensityFunction(
        func=lambda x: np.full(np.shape(x), c),
        name=f"const:{c!r}",
        sup_norm=c,
        l2_norm_sq=c * c,
        l1_norm=c,
    )


def smooth_intensity() -> IntensityFunction:
    """3 + cos(2πx): lies in the trigonometric model with m = 1."""
    return IntensityFunction(
        func=lambda x: 3.0 + np.cos(2.0 * np.pi * x),
        name="smooth",
        sup_norm=4.0,
        l2_norm_sq=9.5,
        l1_norm=3.0,
    )


def intensity_from_id(ident: str) -> IntensityFunction:
    """Resolve ``paper``, ``smooth`` or ``const:<c>``."""
    if ident == "paper":
        return test_intensity()
    if ident == "smooth":
        return smooth_intensity()
    if ident.startswith("const:"):
        try:
            value = float(ident.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad constant intensity {ident!r}") from None
        return constant_intensity(value)
    raise ValueError(f"unknown intensity {ident!r} (expected paper, smooth or const:<c>)")


class CovariateKind(enum.Enum):
    IID_UNIFORM = "iid"
    MIXING_AR = "mixing"


@dataclass(frozen=True)
class CovariateProcessSpec:
    kind: CovariateKind = CovariateKind.IID_UNIFORM
    ar_coefficient: float = 0.5
    noise_sd: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, CovariateKind):
            object.__setattr__(self, "kind", CovariateKind(self.kind))
        if not 0.0 <= self.ar_coefficient < 1.0:
            raise ValueError(f"ar_coefficient must lie in [0, 1), got {self.ar_coefficient}")
        if not self.noise_sd > 0.0:
            raise ValueError(f"noise_sd must be positive, got {self.noise_sd}")


@dataclass(frozen=True)
class Sample:
    xs: np.ndarray
    ys: np.ndarray = field(repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys)
        if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if np.any((xs < 0.0) | (xs > 1.0)) or not np.all(np.isfinite(xs)):
            raise ValueError("covariates must lie in [0, 1]")
        if ys.size and (np.any(ys < 0) or np.any(ys != np.floor(ys))):
            raise ValueError("responses must be non-negative integers")
        xs.setflags(write=False)
        ys = ys.astype(np.int64)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return int(self.xs.size)

    def __len__(self):
        return self.n


def gen_covariates(spec: CovariateProcessSpec, n: int, seed: SeedLike) -> np.ndarray:
    """Draw ``n`` covariates in [0, 1).

    ``MIXING_AR`` runs X_1 ~ U[0, 1), X_i = frac(a X_{i-1} + eps_i) with
    eps_i ~ N(0, noise_sd^2); the mod-1 map keeps the chain on the unit interval.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    if spec.kind is CovariateKind.IID_UNIFORM:
        return rng.random(n)
    xs = np.empty(n)
    xs[0] = rng.random()
    eps = rng.normal(0.0, spec.noise_sd, size=n)
    a = spec.ar_coefficient
    prev = xs[0]
    for i in range(1, n):
        prev = (a * prev + eps[i]) % 1.0
        # float modulo of a tiny negative value can round up to exactly 1.0
        if prev >= 1.0:
            prev = 0.0
        xs[i] = prev
    return xs


def sample_poisson(mean: float, rng: np.random.Generator) -> int:
    """One Poisson(mean) draw; ``mean == 0`` gives 0."""
    mean = float(mean)
    if not math.isfinite(mean) or mean < 0.0:
        raise ValueError(f"Poisson mean must be finite and >= 0, got {mean}")
    if mean == 0.0:
        return 0
    return int(rng.poisson(mean))


def simulate_dataset(
    intensity: IntensityFunction,
    spec: CovariateProcessSpec,
    n: int,
    seed: SeedLike,
) -> Sample:
    """Covariates from ``spec`` and conditionally independent Poisson counts."""
    rng = make_rng(seed)
    xs = gen_covariates(spec, n, rng)
    means = np.asarray(intensity(xs), dtype=float)
    ys = rng.poisson(means)
    return Sample(xs, ys)


def sample_from_arrays(xs: Sequence[float], ys: Sequence[int]) -> Sample:
    return Sample(np.asarray(xs, dtype=float), np.asarray(ys))

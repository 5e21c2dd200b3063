"""Orthonormal bases on ([0, 1], dx) and nested model collections."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class BasisFamily(enum.Enum):
    TRIGONOMETRIC = "trig"
    DYADIC_HISTOGRAM = "hist"


@dataclass(frozen=True)
class Model:
    """The span S_m of the first D_m functions of a basis family.

    Trigonometric coefficients are ordered ``0, 1, -1, 2, -2, ..., m, -m``
    (cosine before sine), histogram coefficients by cell ``1, ..., 2**m``.
    With this ordering the trigonometric models share coefficient prefixes.
    """

    family: BasisFamily
    index: int

    def __post_init__(self):
        if not isinstance(self.family, BasisFamily):
            object.__setattr__(self, "family", BasisFamily(self.family))
        if int(self.index) != self.index or self.index < 0:
            raise ValueError(f"model index must be a non-negative integer, got {self.index}")
        object.__setattr__(self, "index", int(self.index))

    @property
    def dimension(self) -> int:
        if self.family is BasisFamily.TRIGONOMETRIC:
            return 2 * self.index + 1
        return 2**self.index

    @property
    def phi(self) -> float:
        """Constant Φ with sup_x Σ φ_η(x)² <= Φ² D_m; both families attain it with 1."""
        return 1.0

    @property
    def etas(self) -> tuple:
        if self.family is BasisFamily.TRIGONOMETRIC:
            out = [0]
            for j in range(1, self.index + 1):
                out += [j, -j]
            return tuple(out)
        return tuple(range(1, 2**self.index + 1))

    def position(self, eta: int) -> int:
        """Column of basis index ``eta`` in coefficient vectors."""
        if self.family is BasisFamily.TRIGONOMETRIC:
            if abs(eta) > self.index:
                raise ValueError(f"eta={eta} not in I_m for trigonometric m={self.index}")
            return 0 if eta == 0 else 2 * abs(eta) - (1 if eta > 0 else 0)
        if not 1 <= eta <= 2**self.index:
            raise ValueError(f"eta={eta} not in I_m for histogram m={self.index}")
        return eta - 1

    def contains(self, other: "Model") -> bool:
        """True when S_other is a subspace of S_self."""
        return self.family is other.family and other.index <= self.index

    def design_matrix(self, x) -> np.ndarray:
        """(len(x), D_m) matrix of basis values, columns in ``etas`` order."""
        x = _check_unit(x)
        if self.family is BasisFamily.TRIGONOMETRIC:
            out = np.empty((x.size, self.dimension))
            out[:, 0] = 1.0
            for j in range(1, self.index + 1):
                arg = 2.0 * np.pi * j * x
                out[:, 2 * j - 1] = math.sqrt(2.0) * np.cos(arg)
                out[:, 2 * j] = math.sqrt(2.0) * np.sin(arg)
            return out
        cells = cell_index(x, self.index)
        out = np.zeros((x.size, self.dimension))
        out[np.arange(x.size), cells] = math.sqrt(self.dimension)
        return out


def _check_unit(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x < 0.0) | (x > 1.0)) or not np.all(np.isfinite(x)):
        raise ValueError("x must lie in [0, 1]")
    return x


def cell_index(x, m: int) -> np.ndarray:
    """Zero-based dyadic cell of each x at level m; the last cell is closed at 1."""
    d = 2**m
    return np.minimum(np.floor(np.asarray(x, dtype=float) * d).astype(np.int64), d - 1)


def eval_basis(model: Model, eta: int, x: float) -> float:
    """φ_eta(x) for a single point."""
    pos = model.position(eta)
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if model.family is BasisFamily.TRIGONOMETRIC:
        if eta == 0:
            return 1.0
        if eta > 0:
            return math.sqrt(2.0) * math.cos(2.0 * math.pi * eta * x)
        return math.sqrt(2.0) * math.sin(-2.0 * math.pi * eta * x)
    return math.sqrt(model.dimension) if int(cell_index(x, model.index)) == pos else 0.0


@dataclass(frozen=True)
class ModelCollection:
    family: BasisFamily
    indices: tuple
    n: int

    def __post_init__(self):
        if not isinstance(self.family, BasisFamily):
            object.__setattr__(self, "family", BasisFamily(self.family))
        indices = tuple(int(i) for i in self.indices)
        if not indices:
            raise ValueError("a model collection needs at least one model")
        if list(indices) != sorted(set(indices)):
            raise ValueError("model indices must be strictly increasing")
        object.__setattr__(self, "indices", indices)

    @property
    def models(self) -> list:
        return [Model(self.family, m) for m in self.indices]

    @property
    def maximal(self) -> Model:
        return Model(self.family, self.indices[-1])

    def __len__(self):
        return len(self.indices)


def default_collection(family: BasisFamily, n: int) -> ModelCollection:
    """{0, ..., floor(log2 n)} for histograms, {0, ..., floor((n-1)/2)} for trig."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    family = BasisFamily(family)
    if family is BasisFamily.DYADIC_HISTOGRAM:
        top = n.bit_length() - 1
    else:
        top = (n - 1) // 2
    return ModelCollection(family, tuple(range(top + 1)), n)


class Assumption1Check(NamedTuple):
    max_square_sum: float
    ratio: float


def check_assumption1(model: Model, resolution: int = 4096) -> Assumption1Check:
    """Grid maximum of Σ_η φ_η(x)² and its ratio to Φ² D_m."""
    if resolution < 2:
        raise ValueError("grid resolution must be >= 2")
    grid = np.linspace(0.0, 1.0, resolution)
    sums = np.sum(model.design_matrix(grid) ** 2, axis=1)
    top = float(sums.max())
    return Assumption1Check(top, top / (model.phi**2 * model.dimension))

"""Periodic-box geometry, scalar fields, and reduction primitives.

The computational domain is the periodic box [-R, R)^dim sampled on a
uniform grid of n points per axis, a surrogate for the whole space as long
as the solution stays far below machine-visible levels near the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GridMismatch,
    InvalidDim,
    InvalidExponent,
    InvalidOrder,
    NonFiniteState,
    NonpositiveLength,
    NotPowerOfTwo,
)

__all__ = [
    "GridSpec",
    "Field",
    "FracOrder",
    "make_grid",
    "integrate",
    "lp_norm",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-half_length, half_length)^dim."""

    dim: int
    n: int
    half_length: float

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def num_points(self) -> int:
        return self.n**self.dim

    @property
    def volume(self) -> float:
        return (2.0 * self.half_length) ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    def axis_coords(self) -> np.ndarray:
        """Sample points along one axis: x_i = -R + i*dx (x=0 at i=n/2)."""
        return -self.half_length + self.dx * np.arange(self.n)

    def coords(self) -> list:
        """Per-axis coordinate arrays broadcast to the full grid shape."""
        x = self.axis_coords()
        return list(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def maxnorm_radius(self) -> np.ndarray:
        """Max-norm distance of every cell from the origin."""
        c = self.coords()
        r = np.abs(c[0])
        for a in range(1, self.dim):
            r = np.maximum(r, np.abs(c[a]))
        return r


def make_grid(dim: int, n: int, half_length: float) -> GridSpec:
    """Validate and build a GridSpec. dx = 2*half_length/n."""
    if dim not in (1, 2):
        raise InvalidDim(f"dim must be 1 or 2, got {dim}")
    if n < 8 or (n & (n - 1)) != 0:
        raise NotPowerOfTwo(f"n must be a power of two >= 8, got {n}")
    if not (half_length > 0):
        raise NonpositiveLength(f"half_length must be > 0, got {half_length}")
    return GridSpec(dim=int(dim), n=int(n), half_length=float(half_length))


@dataclass(frozen=True)
class Field:
    """A real scalar sample on a GridSpec, immutable after construction.

    Values are stored C-contiguous (row-major over axes).
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise NonFiniteState("field contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _check_same_grid(self, other: "Field"):
        if self.grid != other.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check_same_grid(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check_same_grid(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check_same_grid(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class FracOrder:
    """Fractional order s with the derived decay exponents.

    alpha = N/(N+2-2s) and gamma = (2-2s)/(N+2-2s) govern the sup-norm
    smoothing estimate; r = 1-s is the order of the associated bilinear
    form. gamma is computed as (2-2s)*alpha/N so that gamma*N recovers
    (2-2s)*alpha bitwise (N is a power of two here).
    """

    s: float
    dim: int
    r: float = field(init=False)
    alpha: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise InvalidOrder(f"s must lie in (0,1), got {self.s}")
        if self.dim not in (1, 2):
            raise InvalidDim(f"dim must be 1 or 2, got {self.dim}")
        denom = self.dim + 2.0 - 2.0 * self.s
        alpha = self.dim / denom
        object.__setattr__(self, "r", 1.0 - self.s)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", (2.0 - 2.0 * self.s) * alpha / self.dim)


def integrate(f: Field) -> float:
    """Midpoint-rule integral: sum(values) * dx^dim.

    Exact for trigonometric polynomials up to the grid's Nyquist mode.
    """
    return float(np.sum(f.values)) * f.grid.cell_volume


def lp_norm(f: Field, p: float) -> float:
    """L^p norm on the box; p = math.inf means max |value|."""
    if p != math.inf and p < 1:
        raise InvalidExponent(f"p must be >= 1 (or inf), got {p}")
    a = np.abs(f.values)
    if p == math.inf:
        return float(a.max())
    if p == 1:
        return float(np.sum(a)) * f.grid.cell_volume
    return float(np.sum(a**p) * f.grid.cell_volume) ** (1.0 / p)

"""Initial-condition builders. All profiles are normalized so the grid
integral equals the requested mass exactly."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import Field, GridSpec

__all__ = ["gaussian", "box", "two_bumps"]


def _min_image(delta: np.ndarray, half_length: float) -> np.ndarray:
    span = 2.0 * half_length
    return (delta + half_length) % span - half_length


def _normalize(grid: GridSpec, values: np.ndarray, mass: float) -> Field:
    total = float(values.sum()) * grid.cell_volume
    if total <= 0:
        raise ConfigError("initial profile has no mass on this grid")
    return Field(grid, values * (mass / total))


def gaussian(grid: GridSpec, center, width: float, mass: float) -> Field:
    """Isotropic gaussian bump of the given mass."""
    if np.isscalar(center):
        center = (center,) * grid.dim
    coords = grid.coords()
    r_sq = np.zeros(grid.shape)
    for a in range(grid.dim):
        d = _min_image(coords[a] - center[a], grid.half_length)
        r_sq += d * d
    return _normalize(grid, np.exp(-r_sq / (2.0 * width**2)), mass)


def box(grid: GridSpec, center, half_width: float, mass: float) -> Field:
    """Indicator of the max-norm ball of the given half width."""
    if np.isscalar(center):
        center = (center,) * grid.dim
    coords = grid.coords()
    inside = np.ones(grid.shape, dtype=bool)
    for a in range(grid.dim):
        d = np.abs(_min_image(coords[a] - center[a], grid.half_length))
        inside &= d <= half_width
    return _normalize(grid, inside.astype(float), mass)


def two_bumps(grid: GridSpec, center, separation: float, width: float,
              mass: float, mass_ratio: float = 1.0) -> Field:
    """Two gaussians straddling `center` along the first axis, masses in
    ratio mass_ratio : 1 (asymmetric data for the drift diagnostics)."""
    if np.isscalar(center):
        center = (center,) * grid.dim
    c1 = list(center)
    c2 = list(center)
    c1[0] += separation / 2.0
    c2[0] -= separation / 2.0
    m1 = mass * mass_ratio / (1.0 + mass_ratio)
    m2 = mass / (1.0 + mass_ratio)
    f1 = gaussian(grid, tuple(c1), width, m1)
    f2 = gaussian(grid, tuple(c2), width, m2)
    return f1 + f2

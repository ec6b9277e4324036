"""Fractional Laplacian powers, Riesz kernels, and H^r bilinear forms.

All operator applications are spectral: (-Delta)^sigma acts as the Fourier
multiplier |k|^{2 sigma} on the periodic box, with wavenumbers
k_m = pi*m/half_length. Negative powers pin the zero mode to 0, which fixes
the additive constant of the pressure; only its gradient enters the flow.

The real-space Riesz kernel (KernelSample) exists solely as an independent
cross-validation oracle for the spectral path.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .errors import (
    GridMismatch,
    GridTooLarge,
    InvalidOrder,
    NegativeInput,
    OutOfRangeOrder,
)
from .grid import Field, GridSpec

__all__ = [
    "SpectralPlan",
    "KernelSample",
    "frac_laplacian",
    "pressure",
    "half_energy",
    "linear_semigroup",
    "bilinear_difference",
    "bilinear_gradient",
    "truncate_above",
    "truncate_below",
    "embedding_sides",
    "riesz_constant",
    "gagliardo_constant",
]

# Pair guard for the O(M^2) double sums.
_MAX_DOUBLE_SUM_POINTS = 4096


class SpectralPlan:
    """Cached wavenumber arrays and transform helpers for one grid.

    Owns mutable caches; use one plan per worker. All results are
    deterministic for a fixed grid.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        k1 = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.dx)  # = pi*m/R
        if grid.dim == 1:
            self.kaxes = [k1]
            self.kmag_sq = k1**2
        else:
            kx, ky = np.meshgrid(k1, k1, indexing="ij")
            self.kaxes = [kx, ky]
            self.kmag_sq = kx**2 + ky**2
        # i*k multipliers for first derivatives; the Nyquist mode is zeroed
        # (its sampled derivative is sign-ambiguous and must drop out of
        # real output anyway).
        nyq = grid.n // 2
        self.grad_mult = []
        for a in range(grid.dim):
            m = 1j * self.kaxes[a].copy()
            sl = [slice(None)] * grid.dim
            sl[a] = nyq
            m[tuple(sl)] = 0.0
            self.grad_mult.append(m)
        self._damp_cache: dict = {}

    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values)

    def inverse(self, spectral: np.ndarray) -> np.ndarray:
        return np.real(np.fft.ifftn(spectral))

    def symbol(self, s_pow: float) -> np.ndarray:
        """Multiplier |k|^{2 s_pow}; zero mode is 0 for s_pow != 0, 1 for 0."""
        if s_pow == 0.0:
            return np.ones_like(self.kmag_sq)
        if s_pow > 0:
            return self.kmag_sq**s_pow
        mult = np.zeros_like(self.kmag_sq)
        nz = self.kmag_sq > 0
        mult[nz] = self.kmag_sq[nz] ** s_pow
        return mult

    def gradient(self, values: np.ndarray) -> list:
        """Spectral first derivative along each axis."""
        fhat = self.forward(values)
        return [self.inverse(self.grad_mult[a] * fhat) for a in range(self.grid.dim)]

    def damping_rate(self, s: float) -> float:
        """Max over grid modes of |k|^{-2s} * sum_a k_a sin(k_a dx)/dx.

        This is the per-unit-diffusivity decay rate of the linearized
        upwind/spectral update and bounds the explicit-Euler stable step.
        """
        rate = self._damp_cache.get(s)
        if rate is None:
            dx = self.grid.dx
            acc = np.zeros_like(self.kmag_sq)
            for a in range(self.grid.dim):
                acc = acc + self.kaxes[a] * np.sin(self.kaxes[a] * dx) / dx
            nz = self.kmag_sq > 0
            rate = float(np.max(acc[nz] * self.kmag_sq[nz] ** (-s)))
            self._damp_cache[s] = rate
        return rate


def frac_laplacian(f: Field, s_pow: float, plan: SpectralPlan) -> Field:
    """Apply (-Delta)^{s_pow} spectrally; s_pow < 0 inverts on the
    mean-zero part (zero mode of the result pinned to 0)."""
    if not (-1.0 <= s_pow <= 1.0):
        raise OutOfRangeOrder(f"s_pow must lie in [-1, 1], got {s_pow}")
    if f.grid != plan.grid:
        raise GridMismatch("field and plan grids differ")
    fhat = plan.forward(f.values)
    return Field(f.grid, plan.inverse(fhat * plan.symbol(s_pow)))


def pressure(u: Field, s: float, plan: SpectralPlan) -> Field:
    """Nonlocal pressure p = (-Delta)^{-s} u, zero mode pinned to 0."""
    return frac_laplacian(u, -s, plan)


def half_energy(u: Field, s: float, plan: SpectralPlan) -> float:
    """Quadratic energy int |(-Delta)^{-s/2} u|^2 dx, in Parseval form.

    Equals volume * sum_{k != 0} |k|^{-2s} |c_k|^2 with c_k the normalized
    Fourier coefficients.
    """
    if u.grid != plan.grid:
        raise GridMismatch("field and plan grids differ")
    c = plan.forward(u.values) / u.grid.num_points
    mult = plan.symbol(-s)
    return float(np.sum(mult * np.abs(c) ** 2)) * u.grid.volume


def linear_semigroup(u0: Field, t: float, sigma: float, plan: SpectralPlan) -> Field:
    """Exact solution at time t of u_t = -(-Delta)^sigma u (spectral).

    sigma = 1 is the classical heat flow; sigma = 1-s is the linear
    counterpart of the nonlocal porous medium flow, used as the
    infinite-propagation control in the finite-propagation contrast.
    """
    if not (0.0 < sigma <= 1.0):
        raise OutOfRangeOrder(f"sigma must lie in (0, 1], got {sigma}")
    fhat = plan.forward(u0.values)
    decay = np.exp(-t * plan.symbol(sigma))
    return Field(u0.grid, plan.inverse(fhat * decay))


def riesz_constant(dim: int, s: float) -> float:
    """Constant c(N,s) of the Riesz kernel c|x|^{-N+2s} realizing
    (-Delta)^{-s}. Requires N > 2s for the convolution form to be valid."""
    if dim - 2.0 * s <= 0:
        raise InvalidOrder(
            f"Riesz kernel needs dim > 2s (got dim={dim}, s={s}); "
            "use the spectral path instead"
        )
    return gamma_fn((dim - 2.0 * s) / 2.0) / (
        4.0**s * math.pi ** (dim / 2.0) * gamma_fn(s)
    )


def gagliardo_constant(dim: int, r: float) -> float:
    """Normalization of the difference form so it matches the spectral
    H^r pairing: half the classical fractional-Laplacian constant,
    4^r Gamma(N/2+r) / (2 pi^{N/2} |Gamma(-r)|)."""
    if not (0.0 < r < 1.0):
        raise InvalidOrder(f"r must lie in (0,1), got {r}")
    abs_gamma_minus_r = gamma_fn(2.0 - r) / (r * (1.0 - r))
    c_frac = 4.0**r * gamma_fn(dim / 2.0 + r) / (
        math.pi ** (dim / 2.0) * abs_gamma_minus_r
    )
    return c_frac / 2.0


def _unit_square_kernel_average(s: float) -> float:
    """Average of |x|^{2s-2} over the unit square in 2D (polar quadrature)."""
    a = 2.0 * s - 2.0

    def integrand(theta):
        rmax = 0.5 / math.cos(theta)
        return rmax ** (a + 2.0) / (a + 2.0)

    val, _ = quad(integrand, 0.0, math.pi / 4.0)
    return 8.0 * val


def _origin_cell_average(dim: int, s: float, dx: float) -> float:
    """Average of |x|^{-N+2s} over the dx-cell at the origin.

    5-point-per-axis subsampling at subcell centers; the singular center
    subcell is replaced by its exact average (closed form in 1D, polar
    quadrature in 2D), preserving the kernel's local integrability.
    """
    sub = dx / 5.0
    offsets = (np.arange(5) - 2.0) * sub
    if dim == 1:
        # exact average of |x|^{2s-1} over a cell of side h centered at 0:
        # h^{2s-1} / (s 4^s)
        center_avg = sub ** (2.0 * s - 1.0) / (2.0 * s * 2.0 ** (2.0 * s - 1.0))
        vals = [abs(x) ** (2.0 * s - 1.0) for x in offsets if x != 0.0]
        return (sum(vals) + center_avg) / 5.0
    center_avg = sub ** (2.0 * s - 2.0) * _unit_square_kernel_average(s)
    total = 0.0
    for x in offsets:
        for y in offsets:
            rr = math.hypot(x, y)
            total += center_avg if rr == 0.0 else rr ** (2.0 * s - 2.0)
    return total / 25.0


@dataclass
class KernelSample:
    """Riesz kernel L_s(x) = c(N,s)|x|^{-N+2s} tabulated on grid offsets.

    Offsets use the minimum-image periodic distance. The origin cell gets
    a subsampled average so convolution against it stays integrable.

    The env var FPME_FAULT_KERNEL_SCALE (default 1) multiplies the table;
    it exists so the self-check suite can prove the oracle comparisons are
    sensitive to the kernel constant.
    """

    grid: GridSpec
    s: float

    def __post_init__(self):
        c = riesz_constant(self.grid.dim, self.s)
        n, dx, dim = self.grid.n, self.grid.dx, self.grid.dim
        # minimum-image signed offsets along one axis
        off1 = dx * np.minimum(np.arange(n), n - np.arange(n)).astype(float)
        sgn1 = np.where(np.arange(n) <= n // 2, 1.0, -1.0)
        if dim == 1:
            rad = off1
            comp = [off1 * sgn1]
        else:
            ox, oy = np.meshgrid(off1, off1, indexing="ij")
            sx, sy = np.meshgrid(off1 * sgn1, off1 * sgn1, indexing="ij")
            rad = np.hypot(ox, oy)
            comp = [sx, sy]
        vals = np.zeros_like(rad)
        nz = rad > 0
        vals[nz] = c * rad[nz] ** (2.0 * self.s - dim)
        origin = (0,) * dim
        vals[origin] = c * _origin_cell_average(dim, self.s, dx)
        scale = float(os.environ.get("FPME_FAULT_KERNEL_SCALE", "1"))
        self.values = vals * scale
        # gradient of L_s: c*(2s-N)|x|^{2s-N-2} x, odd, zero at the origin cell
        self.grad_values = []
        for a in range(dim):
            g = np.zeros_like(rad)
            g[nz] = (
                c * (2.0 * self.s - dim) * rad[nz] ** (2.0 * self.s - dim - 2.0) * comp[a][nz]
            )
            self.grad_values.append(g * scale)

    def convolve(self, u: Field) -> Field:
        """Direct real-space convolution (L_s * u) dx^dim — the oracle path."""
        if u.grid != self.grid:
            raise GridMismatch("field and kernel grids differ")
        if self.grid.num_points > _MAX_DOUBLE_SUM_POINTS:
            raise GridTooLarge("direct convolution guard exceeded")
        out = _periodic_convolve(self.values, u.values)
        return Field(u.grid, out * self.grid.cell_volume)

    def convolve_gradient_at_origin(self, u: Field) -> list:
        """(grad L_s * u)(0) per axis by direct summation.

        The kernel tables are indexed by offset; the grid origin x = 0
        sits at position index n/2, so the sum pairs u[j] with the
        offset (n/2 - j) mod n along each axis.
        """
        if u.grid != self.grid:
            raise GridMismatch("field and kernel grids differ")
        n = self.grid.n
        idx = (n // 2 - np.arange(n)) % n
        out = []
        for a in range(self.grid.dim):
            tab = self.grad_values[a]
            for axis in range(self.grid.dim):
                tab = np.take(tab, idx, axis=axis)
            out.append(float(np.sum(tab * u.values)) * self.grid.cell_volume)
        return out


def _periodic_convolve(kernel: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Circular convolution by explicit rolling (independent of the FFT path).

    out[i] = sum_m kernel[m] * u[i - m], all indices periodic.
    """
    out = np.zeros_like(u)
    axes = tuple(range(u.ndim))
    for m in np.ndindex(kernel.shape):
        km = kernel[m]
        if km != 0.0:
            out += km * np.roll(u, m, axis=axes)
    return out


def truncate_above(u: Field, level: float) -> Field:
    """(u - level)_+ elementwise."""
    return Field(u.grid, np.maximum(u.values - level, 0.0))


def truncate_below(u: Field, level: float) -> Field:
    """min(u - level, 0) elementwise."""
    return Field(u.grid, np.minimum(u.values - level, 0.0))


def bilinear_difference(v: Field, w: Field, r: float) -> float:
    """Gagliardo pairing of order r by the direct double sum.

    C_N * sum_{x != y} (v(x)-v(y)) |x-y|^{-(N+2r)} (w(x)-w(y)) dx^{2N}
    with minimum-image periodic distance; C_N chosen so this agrees with
    bilinear_gradient on smooth, well-contained fields.
    """
    if v.grid != w.grid:
        raise GridMismatch("fields live on different grids")
    if not (0.0 < r < 1.0):
        raise InvalidOrder(f"r must lie in (0,1), got {r}")
    g = v.grid
    if g.num_points > _MAX_DOUBLE_SUM_POINTS:
        raise GridTooLarge(
            f"double sum allowed up to {_MAX_DOUBLE_SUM_POINTS} points, "
            f"grid has {g.num_points}"
        )
    kern = _difference_kernel(g, r)
    vv = v.values.ravel()
    ww = w.values.ravel()
    dv = vv[:, None] - vv[None, :]
    dw = ww[:, None] - ww[None, :]
    total = float(np.sum(dv * kern * dw))
    return gagliardo_constant(g.dim, r) * total * g.cell_volume**2


_DIFF_KERNEL_CACHE: dict = {}


def _difference_kernel(grid: GridSpec, r: float) -> np.ndarray:
    """|x_i - x_j|^{-(N+2r)} with min-image distance, zero diagonal (M x M)."""
    key = (grid, r)
    kern = _DIFF_KERNEL_CACHE.get(key)
    if kern is not None:
        return kern
    n, dx = grid.n, grid.dx
    d1 = dx * np.minimum(
        np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]),
        n - np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]),
    ).astype(float)
    if grid.dim == 1:
        dist = d1
    else:
        dist = np.sqrt(
            (d1[:, None, :, None] ** 2 + d1[None, :, None, :] ** 2)
        ).reshape(grid.num_points, grid.num_points)
    kern = np.zeros_like(dist)
    nz = dist > 0
    kern[nz] = dist[nz] ** (-(grid.dim + 2.0 * r))
    if len(_DIFF_KERNEL_CACHE) > 8:
        _DIFF_KERNEL_CACHE.clear()
    _DIFF_KERNEL_CACHE[key] = kern
    return kern


def bilinear_gradient(v: Field, w: Field, r: float, plan: SpectralPlan) -> float:
    """H^r pairing in spectral form: volume * sum_k |k|^{2r} vhat conj(what).

    Equivalent to the difference form for well-resolved fields; the zero
    mode contributes nothing.
    """
    if v.grid != w.grid or v.grid != plan.grid:
        raise GridMismatch("fields/plan live on different grids")
    m = v.grid.num_points
    cv = plan.forward(v.values) / m
    cw = plan.forward(w.values) / m
    mult = plan.symbol(r)
    return float(np.sum(mult * np.real(cv * np.conj(cw)))) * v.grid.volume


def embedding_sides(u: Field, r: float, plan: SpectralPlan):
    """Both sides of the L^1/H^r interpolation bound on int u^q.

    Returns (lhs, (l1, hr, theta, q)) with theta = 2r/N, q = 2 + theta,
    l1 = ||u||_1^theta, and hr the full H^r norm squared (L^2 mass plus
    the gradient pairing), so tests can bound lhs / (l1 * hr).
    """
    if float(u.values.min()) < 0.0:
        raise NegativeInput("embedding_sides requires a nonnegative field")
    dim = u.grid.dim
    theta = 2.0 * r / dim
    q = 2.0 + theta
    lhs = float(np.sum(u.values**q)) * u.grid.cell_volume
    l1 = (float(np.sum(u.values)) * u.grid.cell_volume) ** theta
    l2_sq = float(np.sum(u.values**2)) * u.grid.cell_volume
    hr = l2_sq + bilinear_gradient(u, u, r, plan)
    return lhs, (l1, hr, theta, q)

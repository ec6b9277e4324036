"""Measured functionals of the flow and the decay-exponent fits.

Everything here is a pure function over immutable snapshots: scalar
functionals per time slice (mass, norms, entropy, energies, drift), level
set geometry in parabolic cylinders, and log-log regressions for the
smoothing exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateRegression,
    InsufficientDecade,
    NegativeInput,
    WindowNotCovered,
)
from .fracops import SpectralPlan, half_energy
from .grid import Field, FracOrder, integrate, lp_norm

__all__ = [
    "DiagnosticsRecord",
    "CylinderSpec",
    "ExponentFit",
    "OscillationDecay",
    "record_state",
    "entropy",
    "dissipation",
    "drift_velocity",
    "support_radius",
    "level_set_fraction",
    "oscillation_decay",
    "fit_smoothing_exponents",
    "fit_lp_exponents",
    "lp_exponent_theory",
]

_NEG_BAND = 1e-12
# "one decade" requirement on fit windows, with slack for discrete record times
_MIN_DECADE_SPAN = 8.0


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time slice of every functional the theory constrains."""

    t: float
    mass: float
    lp: dict  # p -> ||u||_p for p in {1, 2, 4, inf}
    entropy: float  # int u log u
    half_energy: float  # int |H u|^2
    dissipation: float  # int u |grad L u|^2
    support_radius: float
    drift_speed: tuple
    clamp_mass: float
    boundary_mass_fraction: float


@dataclass(frozen=True)
class CylinderSpec:
    """Parabolic cylinder: space ball B_R(x0) with trailing window
    [t0 - R, t0]."""

    center: tuple  # (x0, t0) with x0 a per-axis tuple
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise NegativeInput(f"radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class ExponentFit:
    fitted: float
    theoretical: float
    r_squared: float
    window: tuple


@dataclass(frozen=True)
class OscillationDecay:
    points: list  # (R, osc) pairs
    alpha_hat: float
    r_squared: float


def _check_nonneg(u: Field, what: str):
    if float(u.values.min()) < -_NEG_BAND:
        raise NegativeInput(f"{what} requires a nonnegative field")


def entropy(u: Field) -> float:
    """int u log u, with u = 0 cells contributing 0 (the limit value)."""
    v = u.values
    pos = v > 0
    return float(np.sum(np.where(pos, v * np.log(np.where(pos, v, 1.0)), 0.0))) * u.grid.cell_volume


def dissipation(u: Field, s: float, plan: SpectralPlan) -> float:
    """int u |grad (-Delta)^{-s} u|^2 dx with spectral gradients."""
    _check_nonneg(u, "dissipation")
    uhat = plan.forward(u.values)
    phat = uhat * plan.symbol(-s)
    sq = np.zeros_like(u.values)
    for a in range(u.grid.dim):
        sq += plan.inverse(plan.grad_mult[a] * phat) ** 2
    weight = np.maximum(u.values, 0.0)
    return float(np.sum(weight * sq)) * u.grid.cell_volume


def drift_velocity(u: Field, s: float, plan: SpectralPlan) -> list:
    """(grad L_s * u)(0) per axis, computed spectrally.

    Vanishes for data even in every axis; bounded along runs in terms of
    the mass.
    """
    _check_nonneg(u, "drift_velocity")
    uhat = plan.forward(u.values)
    phat = uhat * plan.symbol(-s)
    origin = (u.grid.n // 2,) * u.grid.dim
    out = []
    for a in range(u.grid.dim):
        g = plan.inverse(plan.grad_mult[a] * phat)
        out.append(float(g[origin]))
    return out


def support_radius(u: Field, threshold: float) -> float:
    """Max-norm distance from the origin of the farthest cell above
    threshold; 0 when nothing exceeds it."""
    if not (threshold > 0):
        raise NegativeInput(f"threshold must be > 0, got {threshold}")
    mask = u.values > threshold
    if not np.any(mask):
        return 0.0
    return float(u.grid.maxnorm_radius()[mask].max())


def boundary_mass_fraction(u: Field) -> float:
    """Fraction of |u|-mass sitting in the outermost 5% shell of the box."""
    shell = u.grid.maxnorm_radius() >= 0.95 * u.grid.half_length
    total = float(np.sum(np.abs(u.values)))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(u.values)[shell])) / total


def record_state(state, support_threshold: float | None = None) -> DiagnosticsRecord:
    """Build the full diagnostics record for a solver state."""
    u = state.u
    s = state.s.s
    plan = state.plan
    if support_threshold is None:
        umax = u.max()
        support_threshold = 1e-8 * umax if umax > 0 else math.inf
    return DiagnosticsRecord(
        t=state.t,
        mass=integrate(u),
        lp={
            1.0: lp_norm(u, 1.0),
            2.0: lp_norm(u, 2.0),
            4.0: lp_norm(u, 4.0),
            math.inf: lp_norm(u, math.inf),
        },
        entropy=entropy(u),
        half_energy=half_energy(u, s, plan),
        dissipation=dissipation(u, s, plan),
        support_radius=support_radius(u, support_threshold)
        if math.isfinite(support_threshold)
        else 0.0,
        drift_speed=tuple(drift_velocity(u, s, plan)),
        clamp_mass=state.clamp_mass,
        boundary_mass_fraction=boundary_mass_fraction(u),
    )


# ---------------------------------------------------------------------------
# cylinder geometry over snapshot series
# ---------------------------------------------------------------------------


def _ball_mask(grid, x0, radius) -> np.ndarray:
    coords = grid.coords()
    span = 2.0 * grid.half_length
    dist_sq = np.zeros(grid.shape)
    for a in range(grid.dim):
        d = np.abs(coords[a] - x0[a])
        d = np.minimum(d, span - d)  # periodic minimum image
        dist_sq += d * d
    return dist_sq <= radius * radius


def _center_tuple(center, dim):
    x0, t0 = center
    if np.isscalar(x0):
        x0 = (float(x0),) * dim if dim == 1 else (float(x0),) * dim
    return tuple(float(c) for c in x0), float(t0)


def _window_snapshots(series, t_lo, t_hi):
    tol = 1e-9 * max(1.0, abs(t_hi))
    ts = [t for t, _ in series]
    if not ts or min(ts) > t_lo + tol or max(ts) < t_hi - tol:
        raise WindowNotCovered(
            f"snapshots span [{min(ts) if ts else None}, {max(ts) if ts else None}], "
            f"window needs [{t_lo}, {t_hi}]"
        )
    return [(t, f) for t, f in series if t_lo - tol <= t <= t_hi + tol]


def level_set_fraction(series, level: float, cyl: CylinderSpec) -> float:
    """Space-time fraction of the cylinder where u > level.

    Per-snapshot ball fractions are combined by the trapezoid rule over
    the window [t0-R, t0], with endpoint values linearly interpolated.
    """
    x0, t0 = _center_tuple(cyl.center, series[0][1].grid.dim if series else 1)
    t_lo = t0 - cyl.radius
    snaps = _window_snapshots(series, t_lo, t0)
    grid = snaps[0][1].grid
    mask = _ball_mask(grid, x0, cyl.radius)
    ncells = int(mask.sum())
    if ncells == 0:
        raise WindowNotCovered("cylinder ball contains no grid cells")
    all_ts = np.array([t for t, _ in series])
    all_fr = np.array(
        [float(np.sum(f.values[mask] > level)) / ncells for _, f in series]
    )
    order = np.argsort(all_ts)
    all_ts, all_fr = all_ts[order], all_fr[order]
    inner = [t for t in all_ts if t_lo < t < t0]
    knots = np.array([t_lo] + inner + [t0])
    vals = np.interp(knots, all_ts, all_fr)
    return float(np.trapezoid(vals, knots) / (t0 - t_lo))


def oscillation_decay(series, center, ratios) -> OscillationDecay:
    """Oscillation max-min of u over nested parabolic cylinders.

    ratios are the cylinder radii (>= 4 of them, typically dyadic); the
    returned alpha_hat is the log-log slope of osc against R, the
    empirical modulus-of-continuity exponent. alpha_hat is NaN when some
    oscillation vanishes (constant data).
    """
    if len(ratios) < 4:
        raise DegenerateRegression("need at least 4 radii for the fit")
    dim = series[0][1].grid.dim if series else 1
    x0, t0 = _center_tuple(center, dim)
    points = []
    for radius in sorted(ratios):
        snaps = _window_snapshots(series, t0 - radius, t0)
        grid = snaps[0][1].grid
        mask = _ball_mask(grid, x0, radius)
        if not np.any(mask):
            raise WindowNotCovered("cylinder ball contains no grid cells")
        lo = min(float(f.values[mask].min()) for _, f in snaps)
        hi = max(float(f.values[mask].max()) for _, f in snaps)
        points.append((radius, hi - lo))
    oscs = np.array([o for _, o in points])
    if np.all(oscs > 0):
        slope, r2 = _loglog_fit(np.array([r for r, _ in points]), oscs)
    else:
        slope, r2 = math.nan, 0.0
    return OscillationDecay(points=points, alpha_hat=slope, r_squared=r2)


# ---------------------------------------------------------------------------
# exponent fits
# ---------------------------------------------------------------------------


def _loglog_fit(x: np.ndarray, y: np.ndarray):
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), min(max(r2, 0.0), 1.0)


def _norm_of(rec, p):
    return rec.lp[p]


def _run_window_series(records, window, p):
    t_lo, t_hi = window
    ts, ns = [], []
    for rec in records:
        if t_lo <= rec.t <= t_hi:
            ts.append(rec.t)
            ns.append(_norm_of(rec, p))
    if len(ts) < 4:
        raise InsufficientDecade(
            f"only {len(ts)} records inside the fit window {window}"
        )
    if ts[-1] / ts[0] < _MIN_DECADE_SPAN:
        raise InsufficientDecade(
            f"records span factor {ts[-1] / ts[0]:.2f} in time, need about a decade"
        )
    if not ns[-1] < ns[0]:
        raise DegenerateRegression("norm is not decaying over the fit window")
    return np.array(ts), np.array(ns)


def _fit_decay(records, window, p) -> tuple:
    ts, ns = _run_window_series(records, window, p)
    slope, r2 = _loglog_fit(ts, ns)
    return -slope, r2


def _fit_mass_exponent(runs, window, p) -> tuple:
    masses = sorted({m for m, _ in runs})
    if len(masses) < 2:
        raise DegenerateRegression("mass exponent needs >= 2 distinct masses")
    per_run = []
    for m, records in runs:
        ts, ns = _run_window_series(records, window, p)
        per_run.append((m, np.log(ts), np.log(ns)))
    t_lo = max(lt[0] for _, lt, _ in per_run)
    t_hi = min(lt[-1] for _, lt, _ in per_run)
    probe = np.linspace(t_lo, t_hi, 8)
    slopes, r2s = [], []
    for lt_star in probe:
        lm = np.array([math.log(m) for m, _, _ in per_run])
        ln = np.array([np.interp(lt_star, lt, ln_) for _, lt, ln_ in per_run])
        slope, r2 = np.polyfit(lm, ln, 1)[0], _r2_linear(lm, ln)
        slopes.append(slope)
        r2s.append(r2)
    return float(np.mean(slopes)), float(min(r2s))


def _r2_linear(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0


def fit_smoothing_exponents(runs, order: FracOrder, window) -> tuple:
    """Fit the sup-norm decay and mass exponents across a run family.

    runs: list of (mass, records). The time exponent is the mean of the
    per-run slopes of log||u||_inf against log t (sign flipped); the mass
    exponent regresses log||u(t)||_inf against log mass at fixed probe
    times. Theoretical values come from the FracOrder.
    """
    p = math.inf
    per_run = [_fit_decay(records, window, p) for _, records in runs]
    alpha_fit = ExponentFit(
        fitted=float(np.mean([a for a, _ in per_run])),
        theoretical=order.alpha,
        r_squared=float(min(r for _, r in per_run)),
        window=tuple(window),
    )
    g_fitted, g_r2 = _fit_mass_exponent(runs, window, p)
    gamma_fit = ExponentFit(
        fitted=g_fitted,
        theoretical=order.gamma,
        r_squared=g_r2,
        window=tuple(window),
    )
    return alpha_fit, gamma_fit


def lp_exponent_theory(order: FracOrder, p: float) -> tuple:
    """Theoretical decay exponents for the L^p norm: alpha_p = alpha (p-1)/p,
    gamma_p = (1 + gamma (p-1))/p; p = 1 degenerates to (0, 1), the mass
    conservation line, and p = inf recovers (alpha, gamma)."""
    if p == math.inf:
        return order.alpha, order.gamma
    return order.alpha * (p - 1.0) / p, (1.0 + order.gamma * (p - 1.0)) / p


def fit_lp_exponents(runs, p: float, order: FracOrder, window) -> tuple:
    """Same fits as fit_smoothing_exponents but for the L^p norm."""
    theo_a, theo_g = lp_exponent_theory(order, p)
    per_run = [_fit_decay(records, window, p) for _, records in runs]
    alpha_fit = ExponentFit(
        fitted=float(np.mean([a for a, _ in per_run])),
        theoretical=theo_a,
        r_squared=float(min(r for _, r in per_run)),
        window=tuple(window),
    )
    g_fitted, g_r2 = _fit_mass_exponent(runs, window, p)
    gamma_fit = ExponentFit(
        fitted=g_fitted, theoretical=theo_g, r_squared=g_r2, window=tuple(window)
    )
    return alpha_fit, gamma_fit

"""Explicit conservative upwind evolution of u_t = div(D(u) grad p),
p = (-Delta)^{-s} u.

The velocity v = -grad p is spectral; mass transport is finite-volume
upwind on face fluxes F = D(u_upwind) * v_face, so discrete conservation
and (for the degenerate case D = u) sign preservation are structural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CflViolation, IncompatibleRescale, NegativeInput, NonFiniteState
from .fracops import SpectralPlan, frac_laplacian
from .grid import Field, FracOrder, GridSpec, integrate

__all__ = [
    "DiffusivitySpec",
    "SolverState",
    "StepControl",
    "RunResult",
    "velocity",
    "flux_divergence",
    "stable_dt",
    "step",
    "run",
    "rescale_state",
]

# Roundoff band: negatives above this are clamped to zero after a step.
_CLAMP_BAND = 1e-12


@dataclass(frozen=True)
class DiffusivitySpec:
    """Affine diffusivity D(u) = d1 + d2*u; the pure degenerate flow is
    d1 = 0, d2 = 1. D must stay nonnegative on the attained range."""

    d1: float = 0.0
    d2: float = 1.0

    def __post_init__(self):
        if self.d1 < 0:
            raise NegativeInput(f"d1 must be >= 0, got {self.d1}")

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.d1 + self.d2 * u


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.4
    dt_max: float = math.inf
    t_end: float = 1.0
    record_every: int = 1

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise CflViolation(f"cfl must lie in (0,1], got {self.cfl}")
        if not (self.dt_max > 0):
            raise CflViolation(f"dt_max must be > 0, got {self.dt_max}")
        if not (self.t_end > 0):
            raise CflViolation(f"t_end must be > 0, got {self.t_end}")


@dataclass(frozen=True)
class SolverState:
    u: Field
    t: float
    step_count: int
    diff: DiffusivitySpec
    s: FracOrder
    plan: SpectralPlan
    clamp_mass: float = 0.0  # cumulative mass added by the roundoff clamp

    @property
    def grid(self) -> GridSpec:
        return self.u.grid


@dataclass(frozen=True)
class RunResult:
    final: SolverState
    records: list
    snapshots: list  # (t, Field) pairs, populated when snapshots were requested
    warnings: tuple = ()


def make_state(u0: Field, diff: DiffusivitySpec, s: FracOrder,
               plan: SpectralPlan | None = None) -> SolverState:
    if plan is None:
        plan = SpectralPlan(u0.grid)
    if s.dim != u0.grid.dim:
        raise IncompatibleRescale(
            f"FracOrder dim {s.dim} does not match grid dim {u0.grid.dim}"
        )
    return SolverState(u=u0, t=0.0, step_count=0, diff=diff, s=s, plan=plan)


def velocity(state: SolverState) -> list:
    """Darcy velocity v = -grad p per axis (cell-centered Fields)."""
    return [Field(state.grid, v) for v in _velocity_arrays(state)]


def _velocity_arrays(state: SolverState) -> list:
    plan = state.plan
    uhat = plan.forward(state.u.values)
    phat = uhat * plan.symbol(-state.s.s)
    return [-plan.inverse(plan.grad_mult[a] * phat) for a in range(state.grid.dim)]


def _face_speeds(v: list, axis: int) -> np.ndarray:
    """Velocity at the i+1/2 faces: average of the two adjacent cells."""
    return 0.5 * (v[axis] + np.roll(v[axis], -1, axis=axis))


def flux_divergence(state: SolverState) -> Field:
    """-div F with upwind face fluxes F_{i+1/2} = D(u_up) * v_{i+1/2}.

    Telescoping over the periodic box makes integrate(result) vanish to
    roundoff, so each Euler step conserves mass structurally.
    """
    v = _velocity_arrays(state)
    return Field(state.grid, _flux_divergence_arrays(state, v))


def _flux_divergence_arrays(state: SolverState, v: list) -> np.ndarray:
    u = state.u.values
    dx = state.grid.dx
    out = np.zeros_like(u)
    for a in range(state.grid.dim):
        vf = _face_speeds(v, a)
        u_up = np.where(vf > 0.0, u, np.roll(u, -1, axis=a))
        flux = state.diff.apply(u_up) * vf
        out -= (flux - np.roll(flux, 1, axis=a)) / dx
    return out


def stable_dt(state: SolverState, ctl: StepControl) -> float:
    """Largest admissible explicit step.

    Three limits, each scaled by ctl.cfl, then capped by dt_max and the
    remaining time:
      * advective sweep: dx / max_face(|v| * max D)
      * linearized pressure feedback: 2 / (max D * plan.damping_rate(s)) —
        the update damps mode k at rate D |k|^{-2s} sum_a k_a sin(k_a dx)/dx,
        and explicit Euler needs dt within 2/rate
      * upwind positivity: dx / (|d2| * max_cell sum_a (vf_out+ - vf_in-)),
        the exact sufficient condition for the u-coefficient of the update
        to stay nonnegative.
    A zero-velocity state is an exact fixed point: only dt_max and the
    remaining time apply.
    """
    v = _velocity_arrays(state)
    return _stable_dt_from_v(state, v, ctl)


def _stable_dt_from_v(state: SolverState, v: list, ctl: StepControl) -> float:
    eps = 1e-30
    dx = state.grid.dx
    remaining = max(ctl.t_end - state.t, 0.0)
    dt = min(ctl.dt_max, remaining) if remaining > 0 else ctl.dt_max

    dvals = state.diff.apply(state.u.values)
    if float(dvals.min()) < -_CLAMP_BAND:
        raise NegativeInput("diffusivity D(u) went negative on the attained range")
    dmax = float(dvals.max())

    vmax = 0.0
    pos_speed = np.zeros_like(state.u.values)
    for a in range(state.grid.dim):
        vf = _face_speeds(v, a)
        vmax = max(vmax, float(np.abs(vf).max()))
        pos_speed += np.maximum(vf, 0.0) - np.minimum(np.roll(vf, 1, axis=a), 0.0)

    if vmax > 0.0:
        dt = min(dt, ctl.cfl * dx / (vmax * dmax + eps))
        dt = min(dt, ctl.cfl * 2.0 / (dmax * state.plan.damping_rate(state.s.s) + eps))
        dt = min(dt, ctl.cfl * dx / (abs(state.diff.d2) * float(pos_speed.max()) + eps))
    return dt


def step(state: SolverState, dt: float) -> SolverState:
    """One forward-Euler update u' = u + dt * flux_divergence(state)."""
    v = _velocity_arrays(state)
    loose = StepControl(cfl=1.0, dt_max=math.inf, t_end=state.t + 2.0 * dt + 1.0)
    # the admissible step at cfl=1; callers normally pass stable_dt's value
    if dt > _stable_dt_from_v(state, v, loose) * (1.0 + 1e-12):
        raise CflViolation(f"dt={dt} exceeds the stable step")
    return _step_with_v(state, v, dt)


def _step_with_v(state: SolverState, v: list, dt: float) -> SolverState:
    u_new = state.u.values + dt * _flux_divergence_arrays(state, v)
    if not np.all(np.isfinite(u_new)):
        raise NonFiniteState(f"non-finite values after step {state.step_count}")
    in_band = (u_new > -_CLAMP_BAND) & (u_new < 0.0)
    clamp_added = 0.0
    if np.any(in_band):
        clamp_added = -float(np.sum(u_new[in_band])) * state.grid.cell_volume
        u_new = np.where(in_band, 0.0, u_new)
    return replace(
        state,
        u=Field(state.grid, u_new),
        t=state.t + dt,
        step_count=state.step_count + 1,
        clamp_mass=state.clamp_mass + clamp_added,
    )


def run(
    u0: Field,
    diff: DiffusivitySpec,
    s: FracOrder,
    ctl: StepControl,
    *,
    record_fn=None,
    snapshot_every: int = 0,
) -> RunResult:
    """Advance from t=0 to ctl.t_end with adaptive steps.

    Emits one record per `record_every` steps plus one at t_end, built by
    `record_fn(state)` (defaults to the state's (t, mass) pair; the
    diagnostics module provides the full record builder). When
    snapshot_every > 0, keeps an (t, u) snapshot at the same cadence.
    Issues a BoundaryContamination warning once if the solution climbs
    above 1e-8 * max(u) inside the outermost 5% shell of the box.
    """
    from .diagnostics import record_state  # cycle-free at call time

    if record_fn is None:
        u0max = float(u0.values.max())
        # support threshold is pinned to the initial data for the whole run
        thr = 1e-8 * u0max if u0max > 0 else None
        record_fn = lambda st: record_state(st, support_threshold=thr)  # noqa: E731

    state = make_state(u0, diff, s)
    shell = u0.grid.maxnorm_radius() >= 0.95 * u0.grid.half_length
    warned = []

    records = [record_fn(state)]
    snaps = [(state.t, state.u)] if snapshot_every > 0 else []

    while state.t < ctl.t_end * (1.0 - 1e-14):
        v = _velocity_arrays(state)
        dt = _stable_dt_from_v(state, v, ctl)
        if dt <= 0.0:
            break
        state = _step_with_v(state, v, dt)
        at_end = state.t >= ctl.t_end * (1.0 - 1e-14)
        if state.step_count % ctl.record_every == 0 or at_end:
            records.append(record_fn(state))
            if not warned:
                umax = state.u.max()
                if umax > 0 and float(state.u.values[shell].max()) > 1e-8 * umax:
                    import warnings as _w

                    from .errors import BoundaryContamination

                    _w.warn(
                        "solution reached the outer 5% shell of the box",
                        BoundaryContamination,
                        stacklevel=2,
                    )
                    warned.append("boundary contamination")
        if snapshot_every > 0 and (
            state.step_count % (ctl.record_every * snapshot_every) == 0 or at_end
        ):
            snaps.append((state.t, state.u))
    return RunResult(final=state, records=records, snapshots=snaps,
                     warnings=tuple(warned))


def _as_power_of_two_ratio(b: float):
    """Return integer m with b = 2^m, or None."""
    if b <= 0:
        return None
    m = math.log2(b)
    mi = round(m)
    return mi if abs(m - mi) < 1e-12 else None


def rescale_state(state: SolverState, B: float, C: float) -> SolverState:
    """State of the rescaled solution u_hat(x, t) = A u(Bx, Ct),
    A = C * B^(2s-2).

    The input state at time tau maps to the rescaled state at time tau/C.
    B must be a power of two: B > 1 decimates onto an n/B grid with the
    same spacing; B < 1 relabels the geometry (same samples, wider box).
    """
    if C <= 0:
        raise IncompatibleRescale(f"C must be > 0, got {C}")
    m = _as_power_of_two_ratio(B)
    if m is None:
        raise IncompatibleRescale(f"B must be a power of two, got {B}")
    g = state.grid
    A = C * B ** (2.0 * state.s.s - 2.0)
    if m >= 0:
        bi = int(B)
        if g.n // bi < 8 or g.n % bi != 0:
            raise IncompatibleRescale(
                f"decimation by {bi} leaves fewer than 8 points per axis"
            )
        new_grid = GridSpec(dim=g.dim, n=g.n // bi, half_length=g.half_length / B)
        sl = tuple(slice(None, None, bi) for _ in range(g.dim))
        vals = A * state.u.values[sl]
    else:
        new_grid = GridSpec(dim=g.dim, n=g.n, half_length=g.half_length / B)
        vals = A * state.u.values
    scale_mass = A * B ** (-g.dim)
    return SolverState(
        u=Field(new_grid, vals),
        t=state.t / C,
        step_count=state.step_count,
        diff=state.diff,
        s=state.s,
        plan=SpectralPlan(new_grid),
        clamp_mass=state.clamp_mass * scale_mass,
    )

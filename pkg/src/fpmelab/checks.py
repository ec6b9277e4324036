"""Self-check suite behind `fpme check`.

Each check is deterministic (fixed seeds, no timestamps or paths in the
report) so consecutive runs print identical text. The kernel-oracle checks
compare the spectral operators against the real-space Riesz kernel and
fail if the kernel constant is perturbed (FPME_FAULT_KERNEL_SCALE).
"""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from .diagnostics import dissipation, drift_velocity
from .fracops import (
    KernelSample,
    SpectralPlan,
    bilinear_difference,
    bilinear_gradient,
    frac_laplacian,
    half_energy,
    pressure,
    truncate_above,
    truncate_below,
)
from .grid import Field, FracOrder, integrate, lp_norm, make_grid
from .initial import gaussian
from .solver import DiffusivitySpec, SolverState, StepControl, run, rescale_state
from .snapshots import read_snapshot, write_snapshot

__all__ = ["run_checks", "render_report"]


def _check_integral_linearity():
    g = make_grid(1, 128, 4.0)
    rng = np.random.default_rng(11)
    f = Field(g, rng.normal(size=g.shape))
    h = Field(g, rng.normal(size=g.shape))
    lhs = integrate(2.5 * f + (-1.25) * h)
    rhs = 2.5 * integrate(f) - 1.25 * integrate(h)
    err = abs(lhs - rhs) / max(1.0, abs(rhs))
    return err < 1e-12, f"rel err {err:.2e}"


def _check_holder_interpolation():
    g = make_grid(1, 64, 2.0)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        f = Field(g, rng.normal(size=g.shape))
        for p, q in ((1.0, 2.0), (2.0, 4.0), (1.0, math.inf)):
            lhs = lp_norm(f, p)
            rhs = g.volume ** (1.0 / p - (0.0 if q == math.inf else 1.0 / q)) * lp_norm(f, q)
            worst = max(worst, lhs / rhs)
    return worst <= 1.0 + 1e-12, f"worst ratio {worst:.12f}"


def _check_eigenfunctions():
    g = make_grid(1, 64, 2.0)
    plan = SpectralPlan(g)
    x = g.axis_coords()
    worst = 0.0
    for m in range(1, g.n // 2 + 1):
        k = math.pi * m / g.half_length
        f = Field(g, np.cos(k * x))
        for s in (0.25, 0.5, 0.75):
            got = frac_laplacian(f, s, plan).values
            expect = k ** (2 * s) * np.cos(k * x)
            worst = max(worst, float(np.max(np.abs(got - expect))) / k ** (2 * s))
    return worst < 1e-10, f"worst rel err {worst:.2e}"


def _check_self_adjoint():
    g = make_grid(1, 64, 2.0)
    plan = SpectralPlan(g)
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(50):
        f = Field(g, rng.normal(size=g.shape))
        h = Field(g, rng.normal(size=g.shape))
        a = integrate(frac_laplacian(f, 0.3, plan) * h)
        b = integrate(f * frac_laplacian(h, 0.3, plan))
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-30))
    return worst < 1e-10, f"worst rel gap {worst:.2e}"


def _check_inverse_composition():
    g = make_grid(1, 128, 4.0)
    plan = SpectralPlan(g)
    rng = np.random.default_rng(3)
    f = Field(g, rng.normal(size=g.shape))
    h = frac_laplacian(frac_laplacian(f, 0.35, plan), -0.35, plan)
    target = f.values - f.values.mean()
    err = float(np.max(np.abs(h.values - target)))
    return err < 1e-10, f"max err {err:.2e}"


def _check_half_energy_two_paths():
    g = make_grid(1, 128, 4.0)
    plan = SpectralPlan(g)
    rng = np.random.default_rng(5)
    u = Field(g, rng.normal(size=g.shape))
    s = 0.4
    a = half_energy(u, s, plan)
    hu = frac_laplacian(u, -s / 2.0, plan)
    b = integrate(hu * hu)
    gap = abs(a - b) / abs(b)
    return gap < 1e-10, f"rel gap {gap:.2e}"


def _check_pressure_kernel_oracle():
    g = make_grid(1, 512, 16.0)
    plan = SpectralPlan(g)
    u = gaussian(g, 0.0, 0.5, 1.0)
    p_spec = pressure(u, 0.25, plan).values
    p_kern = KernelSample(g, 0.25).convolve(u).values
    p_kern = p_kern - p_kern.mean()
    gap = float(np.max(np.abs(p_kern - p_spec))) / float(np.max(np.abs(p_spec)))
    return gap < 0.02, f"rel gap {gap:.4f} (tol 0.02)"


def _check_drift_kernel_oracle():
    g = make_grid(1, 512, 16.0)
    plan = SpectralPlan(g)
    u = gaussian(g, 3.0, 0.7, 1.0)
    d_spec = drift_velocity(u, 0.25, plan)[0]
    d_kern = KernelSample(g, 0.25).convolve_gradient_at_origin(u)[0]
    gap = abs(d_spec - d_kern) / abs(d_kern)
    return gap < 0.02, f"rel gap {gap:.4f} (tol 0.02)"


def _check_bilinear_double_sum_oracle():
    g = make_grid(1, 32, 16.0)
    rng = np.random.default_rng(17)
    v = Field(g, rng.normal(size=g.shape))
    w = Field(g, rng.normal(size=g.shape))
    r = 0.6
    got = bilinear_difference(v, w, r)
    # extended-precision re-summation of the same double sum
    from .fracops import _difference_kernel, gagliardo_constant

    kern = _difference_kernel(g, r)
    vv, ww = v.values.ravel(), w.values.ravel()
    terms = []
    for i in range(g.n):
        for j in range(g.n):
            if i != j:
                terms.append((vv[i] - vv[j]) * kern[i, j] * (ww[i] - ww[j]))
    oracle = math.fsum(terms) * gagliardo_constant(1, r) * g.cell_volume**2
    gap = abs(got - oracle) / max(abs(oracle), 1e-30)
    return gap < 1e-10, f"rel gap {gap:.2e}"


def _check_bilinear_inequalities():
    g = make_grid(1, 32, 16.0)
    rng = np.random.default_rng(29)
    r = 0.5
    ok = True
    worst = 0.0
    for _ in range(100):
        u = Field(g, rng.normal(size=g.shape))
        k = float(rng.uniform(-0.5, 0.5))
        up = truncate_above(u, k)
        um = truncate_below(u, k)
        lhs = bilinear_difference(up, u, r)
        rhs = bilinear_difference(up, up, r)
        worst = max(worst, rhs - lhs)
        ok &= lhs >= rhs - 1e-12
        ok &= bilinear_difference(up, um, r) >= -1e-12
        gw = Field(g, np.clip(u.values, -0.25, 0.25))
        ok &= bilinear_difference(gw, u, r) >= -1e-12
        ok &= (
            bilinear_difference(gw, u, r)
            <= bilinear_difference(u, u, r) + 1e-12
        )
    return bool(ok), f"worst margin {worst:.2e}"


def _check_representation_agreement():
    gaps = []
    for n in (64, 128, 256):
        g = make_grid(1, n, 8.0)
        plan = SpectralPlan(g)
        x = g.axis_coords()
        v = Field(g, np.exp(-(x**2) / 2.0))
        w = Field(g, np.exp(-((x - 1.0) ** 2) / 4.5))
        bd = bilinear_difference(v, w, 0.75)
        bg = bilinear_gradient(v, w, 0.75, plan)
        gaps.append(abs(bd - bg) / abs(bg))
    decreasing = gaps[0] > gaps[1] > gaps[2]
    return decreasing and gaps[-1] < 0.25, (
        "gaps " + " ".join(f"{gp:.4f}" for gp in gaps)
    )


def _check_truncation_identity():
    g = make_grid(1, 64, 2.0)
    rng = np.random.default_rng(31)
    # Sterbenz range so k + (u - k) is exact in floating point
    u = Field(g, rng.uniform(0.25, 1.0, size=g.shape))
    k = 0.5
    rec = k + truncate_above(u, k).values + truncate_below(u, k).values
    exact = np.array_equal(rec, u.values)
    return exact, "bitwise reconstruction"


def _check_solver_micro_run():
    g = make_grid(1, 128, 8.0)
    u0 = gaussian(g, 0.0, 0.5, 1.0)
    ctl = StepControl(cfl=0.4, dt_max=0.01, t_end=0.2, record_every=4)
    res = run(u0, DiffusivitySpec(0.0, 1.0), FracOrder(0.25, 1), ctl)
    recs = res.records
    m0 = recs[0].mass
    drift = max(abs(r.mass - m0) / m0 for r in recs)
    minu = res.final.u.min()
    linf = [r.lp[math.inf] for r in recs]
    mono = all(linf[i + 1] <= linf[i] * (1 + 1e-8) for i in range(len(linf) - 1))
    he = [r.half_energy for r in recs]
    emono = all(he[i + 1] <= he[i] * (1 + 1e-8) for i in range(len(he) - 1))
    ok = drift <= 1e-10 and minu >= -1e-12 and mono and emono
    return ok, f"mass drift {drift:.2e}, min u {minu:.2e}"


def _check_snapshot_roundtrip():
    g = make_grid(1, 64, 4.0)
    rng = np.random.default_rng(41)
    u = Field(g, np.abs(rng.normal(size=g.shape)))
    state = SolverState(
        u=u, t=0.725, step_count=3, diff=DiffusivitySpec(0.1, 0.9),
        s=FracOrder(0.3, 1), plan=SpectralPlan(g),
    )
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "state.snapshot")
        write_snapshot(state, path)
        back = read_snapshot(path)
    same = np.array_equal(back.u.values, u.values) and back.t == state.t
    return same, "bit-exact round trip"


def _check_velocity_symmetry():
    from .solver import make_state, velocity

    g = make_grid(1, 128, 8.0)
    u = gaussian(g, 0.0, 0.7, 1.0)
    st = make_state(u, DiffusivitySpec(0.0, 1.0), FracOrder(0.25, 1))
    v = velocity(st)[0].values
    # v(-x) = -v(x): indices i and n-i mirror around the origin at n/2
    mirrored = -v[(-np.arange(g.n)) % g.n]
    err = float(np.max(np.abs(v - mirrored)))
    return err < 1e-10, f"max asymmetry {err:.2e}"


def _check_rescale_amplitude():
    g = make_grid(1, 64, 4.0)
    u = gaussian(g, 0.0, 0.5, 1.0)
    from .solver import make_state

    st = make_state(u, DiffusivitySpec(0.0, 1.0), FracOrder(0.5, 1))
    r = rescale_state(st, 2.0, 2.0)
    a = float(r.u.values.max() / st.u.values.max())
    ok = abs(a - 1.0) < 1e-12 and r.grid.n == 32
    return ok, f"A {a:.12f}"


def _check_dissipation_closed_form():
    g = make_grid(1, 256, 4.0)
    plan = SpectralPlan(g)
    x = g.axis_coords()
    c0, a = 1.5, 0.7
    k0 = math.pi * 2 / g.half_length
    u = Field(g, c0 + a * np.cos(k0 * x))
    s = 0.3
    got = dissipation(u, s, plan)
    expect = c0 * a**2 * k0 ** (2 - 4 * s) * g.half_length
    gap = abs(got - expect) / expect
    return gap < 1e-10, f"rel gap {gap:.2e}"


_CHECKS = [
    ("integral_linearity", _check_integral_linearity),
    ("holder_interpolation", _check_holder_interpolation),
    ("frac_laplacian_eigenfunctions", _check_eigenfunctions),
    ("frac_laplacian_self_adjoint", _check_self_adjoint),
    ("inverse_composition", _check_inverse_composition),
    ("half_energy_two_paths", _check_half_energy_two_paths),
    ("pressure_kernel_oracle", _check_pressure_kernel_oracle),
    ("drift_kernel_oracle", _check_drift_kernel_oracle),
    ("bilinear_double_sum_oracle", _check_bilinear_double_sum_oracle),
    ("bilinear_inequalities", _check_bilinear_inequalities),
    ("representation_agreement", _check_representation_agreement),
    ("truncation_identity", _check_truncation_identity),
    ("dissipation_closed_form", _check_dissipation_closed_form),
    ("solver_micro_run", _check_solver_micro_run),
    ("snapshot_roundtrip", _check_snapshot_roundtrip),
    ("velocity_symmetry", _check_velocity_symmetry),
    ("rescale_amplitude", _check_rescale_amplitude),
]


def run_checks():
    """Run every check; returns list of (name, ok, detail)."""
    results = []
    for name, fn in _CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results


def render_report(results) -> str:
    lines = []
    for name, ok, detail in results:
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    npass = sum(1 for _, ok, _ in results if ok)
    lines.append(f"{npass}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"

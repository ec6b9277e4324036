"""fpmelab: a simulation laboratory for the fractional porous medium flow
u_t = div(u grad (-Delta)^{-s} u) on a periodic box."""

from .diagnostics import (
    CylinderSpec,
    DiagnosticsRecord,
    ExponentFit,
    OscillationDecay,
    dissipation,
    drift_velocity,
    entropy,
    fit_lp_exponents,
    fit_smoothing_exponents,
    level_set_fraction,
    lp_exponent_theory,
    oscillation_decay,
    record_state,
    support_radius,
)
from .fracops import (
    KernelSample,
    SpectralPlan,
    bilinear_difference,
    bilinear_gradient,
    embedding_sides,
    frac_laplacian,
    half_energy,
    linear_semigroup,
    pressure,
    truncate_above,
    truncate_below,
)
from .grid import Field, FracOrder, GridSpec, integrate, lp_norm, make_grid
from .solver import (
    DiffusivitySpec,
    RunResult,
    SolverState,
    StepControl,
    flux_divergence,
    rescale_state,
    run,
    stable_dt,
    step,
    velocity,
)

__version__ = "0.1.0"

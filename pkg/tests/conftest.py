import numpy as np
import pytest

from fpmelab import DiffusivitySpec, Field, FracOrder, StepControl, make_grid, run
from fpmelab.initial import gaussian


@pytest.fixture(scope="session")
def grid64():
    return make_grid(1, 64, 2.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def small_run(n=256, half_length=16.0, s=0.25, width=0.5, mass=1.0,
              t_end=0.5, dt_max=0.02, record_every=5, d1=0.0, d2=1.0,
              snapshot_every=0):
    """Shared miniature solver run used by several test modules."""
    g = make_grid(1, n, half_length)
    u0 = gaussian(g, 0.0, width, mass)
    ctl = StepControl(cfl=0.4, dt_max=dt_max, t_end=t_end,
                      record_every=record_every)
    return run(u0, DiffusivitySpec(d1, d2), FracOrder(s, 1), ctl,
               snapshot_every=snapshot_every)

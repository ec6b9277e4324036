"""Experiment configuration: flat key = value text with dotted groups.

Example::

    name = a1
    grid.dim = 1
    grid.n = 2048
    grid.half_length = 64
    s = 0.25
    diffusivity.d1 = 0
    diffusivity.d2 = 1
    ic.type = gaussian
    ic.width = 0.25
    ic.mass = 1
    control.t_end = 20
    control.record_every = 5
    output_dir = out/a1

Comments start with '#'. Unknown keys are rejected with their line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

from .errors import ConfigError, DimensionMismatch
from .grid import Field, FracOrder, GridSpec, make_grid
from .initial import box, gaussian, two_bumps
from .solver import DiffusivitySpec, StepControl

__all__ = ["ExperimentConfig", "parse_config", "load_config"]

_KNOWN_KEYS = {
    "name", "s", "seed", "output_dir", "snapshot_every",
    "grid.dim", "grid.n", "grid.half_length",
    "diffusivity.d1", "diffusivity.d2",
    "ic.type", "ic.center", "ic.width", "ic.mass", "ic.half_width",
    "ic.separation", "ic.mass_ratio", "ic.path",
    "control.cfl", "control.dt_max", "control.t_end", "control.record_every",
    "sweep.masses", "sweep.s",
}


@dataclass
class ExperimentConfig:
    name: str = "run"
    grid_dim: int = 1
    grid_n: int = 256
    grid_half_length: float = 16.0
    s: float = 0.25
    d1: float = 0.0
    d2: float = 1.0
    ic_type: str = "gaussian"
    ic_center: float = 0.0
    ic_width: float = 0.5
    ic_mass: float = 1.0
    ic_half_width: float = 1.0
    ic_separation: float = 3.0
    ic_mass_ratio: float = 1.0
    ic_path: str = ""
    cfl: float = 0.4
    dt_max: float = 0.05
    t_end: float = 1.0
    record_every: int = 5
    snapshot_every: int = 0
    output_dir: str = "out"
    seed: int = 0
    sweep_masses: list = dc_field(default_factory=list)
    sweep_s: list = dc_field(default_factory=list)
    lines: dict = dc_field(default_factory=dict, repr=False)

    def _line(self, key):
        return self.lines.get(key)

    def validate(self):
        if self.grid_dim not in (1, 2):
            raise ConfigError(
                f"grid.dim must be 1 or 2, got {self.grid_dim} (field 'grid.dim')",
                self._line("grid.dim"),
            )
        if self.grid_n < 8 or (self.grid_n & (self.grid_n - 1)) != 0:
            raise ConfigError(
                f"grid.n must be a power of two >= 8, got {self.grid_n} (field 'grid.n')",
                self._line("grid.n"),
            )
        if not (self.grid_half_length > 0):
            raise ConfigError(
                f"grid.half_length must be > 0 (field 'grid.half_length')",
                self._line("grid.half_length"),
            )
        for s_val in [self.s] + list(self.sweep_s):
            if not (0.0 < s_val < 1.0):
                raise ConfigError(
                    f"s must lie in (0,1), got {s_val} (field 's')", self._line("s")
                )
        if self.d1 < 0:
            raise ConfigError(
                f"diffusivity.d1 must be >= 0 (field 'diffusivity.d1')",
                self._line("diffusivity.d1"),
            )
        if self.ic_type not in ("gaussian", "box", "two_bumps", "from_snapshot"):
            raise ConfigError(
                f"unknown ic.type '{self.ic_type}' (field 'ic.type')",
                self._line("ic.type"),
            )
        if self.ic_type != "from_snapshot" and not (self.ic_mass > 0):
            raise ConfigError(
                f"ic.mass must be > 0, got {self.ic_mass} (field 'ic.mass')",
                self._line("ic.mass"),
            )
        if self.ic_type == "from_snapshot" and not self.ic_path:
            raise ConfigError(
                "ic.type = from_snapshot requires ic.path (field 'ic.path')",
                self._line("ic.type"),
            )
        for m in self.sweep_masses:
            if not (m > 0):
                raise ConfigError(
                    f"sweep mass must be > 0, got {m} (field 'sweep.masses')",
                    self._line("sweep.masses"),
                )
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError(
                f"control.cfl must lie in (0,1] (field 'control.cfl')",
                self._line("control.cfl"),
            )
        if not (self.t_end > 0):
            raise ConfigError(
                f"control.t_end must be > 0 (field 'control.t_end')",
                self._line("control.t_end"),
            )
        if self.record_every < 1:
            raise ConfigError(
                f"control.record_every must be >= 1 (field 'control.record_every')",
                self._line("control.record_every"),
            )
        return self

    # -- builders -------------------------------------------------------------

    def make_grid(self) -> GridSpec:
        return make_grid(self.grid_dim, self.grid_n, self.grid_half_length)

    def make_order(self, s: float | None = None) -> FracOrder:
        return FracOrder(self.s if s is None else s, self.grid_dim)

    def make_diffusivity(self) -> DiffusivitySpec:
        return DiffusivitySpec(self.d1, self.d2)

    def make_control(self) -> StepControl:
        dt_max = self.dt_max if self.dt_max > 0 else math.inf
        return StepControl(cfl=self.cfl, dt_max=dt_max, t_end=self.t_end,
                           record_every=self.record_every)

    def make_initial(self, grid: GridSpec, mass: float | None = None) -> Field:
        mass = self.ic_mass if mass is None else mass
        if self.ic_type == "gaussian":
            return gaussian(grid, self.ic_center, self.ic_width, mass)
        if self.ic_type == "box":
            return box(grid, self.ic_center, self.ic_half_width, mass)
        if self.ic_type == "two_bumps":
            return two_bumps(grid, self.ic_center, self.ic_separation,
                             self.ic_width, mass, self.ic_mass_ratio)
        # from_snapshot
        from .snapshots import read_snapshot

        state = read_snapshot(self.ic_path)
        if state.grid.dim != grid.dim:
            raise DimensionMismatch(
                f"snapshot is {state.grid.dim}D but the experiment grid is "
                f"{grid.dim}D"
            )
        if state.grid != grid:
            raise DimensionMismatch(
                "snapshot grid does not match the experiment grid"
            )
        return state.u

    def outside_theory(self, s: float | None = None) -> bool:
        s_val = self.s if s is None else s
        return (self.grid_dim == 1 and s_val >= 0.5) or s_val == 0.5


_FIELD_MAP = {
    "name": ("name", str),
    "s": ("s", float),
    "seed": ("seed", int),
    "output_dir": ("output_dir", str),
    "snapshot_every": ("snapshot_every", int),
    "grid.dim": ("grid_dim", int),
    "grid.n": ("grid_n", int),
    "grid.half_length": ("grid_half_length", float),
    "diffusivity.d1": ("d1", float),
    "diffusivity.d2": ("d2", float),
    "ic.type": ("ic_type", str),
    "ic.center": ("ic_center", float),
    "ic.width": ("ic_width", float),
    "ic.mass": ("ic_mass", float),
    "ic.half_width": ("ic_half_width", float),
    "ic.separation": ("ic_separation", float),
    "ic.mass_ratio": ("ic_mass_ratio", float),
    "ic.path": ("ic_path", str),
    "control.cfl": ("cfl", float),
    "control.dt_max": ("dt_max", float),
    "control.t_end": ("t_end", float),
    "control.record_every": ("record_every", int),
}


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key '{key}'", lineno)
        cfg.lines[key] = lineno
        try:
            if key == "sweep.masses":
                cfg.sweep_masses = [float(v) for v in value.split(",") if v.strip()]
            elif key == "sweep.s":
                cfg.sweep_s = [float(v) for v in value.split(",") if v.strip()]
            else:
                attr, conv = _FIELD_MAP[key]
                setattr(cfg, attr, conv(value))
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}': {exc}", lineno) from exc
    return cfg.validate()


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)

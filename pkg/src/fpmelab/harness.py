"""Experiment orchestration: runs, sweeps, series/manifest output.

The CSV series format is the stable machine interface:

    t,mass,l1,l2,l4,linf,entropy,half_energy,dissipation,support_radius,
    drift_x[,drift_y],clamp_mass,boundary_fraction

with reals rendered as shortest round-trip decimals, so identical configs
produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from . import __version__
from .config import ExperimentConfig
from .diagnostics import (
    fit_lp_exponents,
    fit_smoothing_exponents,
    oscillation_decay,
    support_radius,
)
from .errors import BoundaryContamination, FpmeError
from .solver import run
from .snapshots import write_snapshot

__all__ = ["execute_run", "execute_sweep", "RunOutput", "worker_count"]


def worker_count(njobs: int) -> int:
    env = os.environ.get("FPME_THREADS", "")
    if env.strip():
        cap = max(1, int(env))
    else:
        cap = os.cpu_count() or 1
    return max(1, min(njobs, cap))


@dataclass
class RunOutput:
    config: ExperimentConfig
    result: object
    out_dir: Path
    warnings: list = dc_field(default_factory=list)
    manifest: dict = dc_field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 2 if self.warnings else 0


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(float(x))


def _series_lines(records, dim: int) -> list:
    drift_cols = "drift_x" if dim == 1 else "drift_x,drift_y"
    header = (
        "t,mass,l1,l2,l4,linf,entropy,half_energy,dissipation,"
        f"support_radius,{drift_cols},clamp_mass,boundary_fraction"
    )
    lines = [header]
    for r in records:
        cells = [
            r.t, r.mass, r.lp[1.0], r.lp[2.0], r.lp[4.0], r.lp[math.inf],
            r.entropy, r.half_energy, r.dissipation, r.support_radius,
            *r.drift_speed, r.clamp_mass, r.boundary_mass_fraction,
        ]
        lines.append(",".join(_fmt(c) for c in cells))
    return lines


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = {k: v for k, v in vars(cfg).items() if k != "lines"}
    return echo


def execute_run(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    *,
    mass: float | None = None,
    s: float | None = None,
) -> RunOutput:
    """Run one configured experiment and persist series, snapshots, manifest."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    grid = cfg.make_grid()
    u0 = cfg.make_initial(grid, mass=mass)
    order = cfg.make_order(s=s)
    ctl = cfg.make_control()

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundaryContamination)
        result = run(
            u0,
            cfg.make_diffusivity(),
            order,
            ctl,
            snapshot_every=cfg.snapshot_every,
        )
    warn_msgs = sorted({str(w.message) for w in caught})

    series_path = out / "series.csv"
    series_path.write_text("\n".join(_series_lines(result.records, grid.dim)) + "\n",
                           encoding="utf-8")
    outputs = [series_path]

    final_path = out / "final.snapshot"
    write_snapshot(result.final, final_path)
    outputs.append(final_path)

    if cfg.snapshot_every > 0:
        for i, (t, field) in enumerate(result.snapshots):
            p = out / f"snap_{i:05d}.snapshot"
            snap_state = result.final.__class__(
                u=field, t=t, step_count=0, diff=result.final.diff,
                s=result.final.s, plan=result.final.plan,
            )
            write_snapshot(snap_state, p)
            outputs.append(p)

    manifest = {
        "name": cfg.name,
        "code_version": __version__,
        "started_utc": started,
        "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "record_count": len(result.records),
        "outside_theory": cfg.outside_theory(s=s),
        "warnings": warn_msgs,
        "config": _config_echo(cfg),
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return RunOutput(config=cfg, result=result, out_dir=out,
                     warnings=warn_msgs, manifest=manifest)


def _sweep_fit_rows(cfg, s_val, runs, snapshots):
    """Fit rows for one s value of a sweep: (quantity, fitted, theoretical,
    r2, status)."""
    order = cfg.make_order(s=s_val)
    t_end = cfg.t_end
    # a 20x window so the recorded times comfortably span a decade
    window = (t_end / 40.0, t_end / 2.0)
    rows = []
    try:
        af, gf = fit_smoothing_exponents(runs, order, window)
        a2, g2 = fit_lp_exponents(runs, 2.0, order, window)
        for name, fit in (("alpha", af), ("gamma", gf),
                          ("alpha_p2", a2), ("gamma_p2", g2)):
            rows.append((name, fit.fitted, fit.theoretical, fit.r_squared, "ok"))
    except FpmeError as exc:
        for name in ("alpha", "gamma", "alpha_p2", "gamma_p2"):
            rows.append((name, math.nan, math.nan, math.nan, f"failed: {exc}"))
    if cfg.outside_theory(s=s_val):
        rows.append(("regularity_alpha_hat", math.nan, math.nan, math.nan, "excluded"))
    elif snapshots:
        t0 = 0.75 * t_end
        radii = [t0 / 24.0 * 2.0**j for j in range(5)]
        try:
            osc = oscillation_decay(snapshots, ((0.0,) * cfg.grid_dim, t0), radii)
            rows.append(
                ("regularity_alpha_hat", osc.alpha_hat, math.nan, osc.r_squared, "ok")
            )
        except FpmeError as exc:
            rows.append(("regularity_alpha_hat", math.nan, math.nan, math.nan,
                         f"failed: {exc}"))
    else:
        rows.append(("regularity_alpha_hat", math.nan, math.nan, math.nan,
                     "no snapshots"))
    return rows


def execute_sweep(cfg: ExperimentConfig, out_dir: str | Path | None = None):
    """Run the mass x s grid, then fit decay exponents per s value.

    Returns (exit_code, summary_text). Individual run failures are recorded
    in the summary and do not abort the sweep.
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    masses = cfg.sweep_masses or [cfg.ic_mass]
    s_values = cfg.sweep_s or [cfg.s]

    jobs = [(s_val, m) for s_val in s_values for m in masses]

    def one(job):
        s_val, m = job
        sub = out / f"{cfg.name}_s{s_val}_m{m}"
        try:
            ro = execute_run(cfg, sub, mass=m, s=s_val)
            return (s_val, m, ro, None)
        except FpmeError as exc:
            return (s_val, m, None, str(exc))

    results = []
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        for res in pool.map(one, jobs):
            results.append(res)

    lines = ["s,quantity,fitted,theoretical,r_squared,status"]
    any_failed = False
    all_failed = True
    for s_val in s_values:
        per_s = [(m, ro, err) for sv, m, ro, err in results if sv == s_val]
        failures = [(m, err) for m, _, err in per_s if err is not None]
        any_failed = any_failed or bool(failures)
        runs = [(m, ro.result.records) for m, ro, err in per_s if err is None]
        for m, err in failures:
            lines.append(f"{s_val},run_m{m},nan,nan,nan,failed: {err}")
        if not runs:
            continue
        all_failed = False
        snapshots = None
        for m, ro, err in per_s:
            if err is None and ro.result.snapshots:
                snapshots = ro.result.snapshots
                break
        for name, fitted, theo, r2, status in _sweep_fit_rows(
            cfg, s_val, runs, snapshots
        ):
            any_failed = any_failed or status.startswith("failed")
            lines.append(
                f"{s_val},{name},{_fmt(fitted)},{_fmt(theo)},{_fmt(r2)},{status}"
            )
    summary = "\n".join(lines) + "\n"
    (out / "summary.csv").write_text(summary, encoding="utf-8")
    if all_failed:
        code = 1
    elif any_failed:
        code = 2
    else:
        code = 0
    return code, summary

"""Command line interface.

Subcommands: run <config>, sweep <config>, check, info <snapshot>.
Exit codes: 0 ok, 1 error, 2 completed with warnings.
FPME_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import sys

from .checks import render_report, run_checks
from .config import load_config
from .errors import FpmeError
from .harness import execute_run, execute_sweep
from .snapshots import snapshot_metadata


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = execute_run(cfg)
    print(f"run '{cfg.name}': {out.manifest['record_count']} records -> {out.out_dir}")
    for w in out.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return out.exit_code


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    code, summary = execute_sweep(cfg)
    print(summary, end="")
    return code


def _cmd_check(_args) -> int:
    results = run_checks()
    print(render_report(results), end="")
    return 0 if all(ok for _, ok, _ in results) else 1


def _cmd_info(args) -> int:
    meta = snapshot_metadata(args.snapshot)
    for key in ("dim", "n", "half_length", "s", "d1", "d2", "t"):
        print(f"{key} = {meta[key]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpme",
        description="Fractional porous medium flow laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured run")
    p_run.add_argument("config")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a mass/s sweep and fit exponents")
    p_sweep.add_argument("config")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_check = sub.add_parser("check", help="run the property self-checks")
    p_check.set_defaults(fn=_cmd_check)

    p_info = sub.add_parser("info", help="print snapshot metadata")
    p_info.add_argument("snapshot")
    p_info.set_defaults(fn=_cmd_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FpmeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands
-----------
simulate  time series of the selected measures as CSV
snapshot  phase or quadrature distribution at one time as CSV
verify    closed-form block amplitudes against RK4 integration
preset    print one of the four built-in parameter regimes

Exit codes are 0 on success, 1 for configuration errors, 2 for numeric
failures and 3 when verification fails.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager

from . import sweep
from .config import PRESETS, ConfigError, RunConfig, load_config, preset

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; keys override the preset")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a built-in regime")
    p.add_argument("--gamma", type=float, default=1.0, help="coupling ratio for --preset (1 or 2)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lambdakerr", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write the time series CSV")
    _add_config_options(p)
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    p.add_argument("--workers", type=int, default=1, help="threads over time nodes")

    p = sub.add_parser("snapshot", help="write a distribution CSV at one time")
    _add_config_options(p)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--kind", choices=("phase", "position", "momentum"), required=True)
    p.add_argument("--out", default="-")

    p = sub.add_parser("verify", help="check closed form against RK4")
    _add_config_options(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--tau-max", type=float, default=None, help="override the sweep length")

    p = sub.add_parser("preset", help="show a built-in regime")
    p.add_argument("--name", choices=sorted(PRESETS), required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--print", action="store_true", dest="show", help="print as a config file")
    return ap


def resolve_config(args) -> RunConfig:
    base = preset(args.preset, args.gamma) if args.preset else RunConfig()
    if args.config:
        return load_config(args.config, base)
    return base


@contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def _run(args) -> int:
    if args.command == "preset":
        cfg = preset(args.name, args.gamma)
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    cfg = resolve_config(args)
    if args.command == "simulate":
        if args.workers < 1:
            raise ConfigError("workers must be >= 1")
        text = sweep.simulate(cfg, workers=args.workers)
        with _output(args.out) as fh:
            fh.write(text)
        return EXIT_OK
    if args.command == "snapshot":
        if args.tau < 0:
            raise ConfigError("tau must be non-negative")
        text = sweep.snapshot(cfg, args.tau, args.kind)
        with _output(args.out) as fh:
            fh.write(text)
        return EXIT_OK
    run = sweep.verify(cfg, args.tol, args.tau_max)
    for r in run.reports:
        status = "ok  " if r.passed else "FAIL"
        print(f"{status} block (n1={r.block.n1}, n2={r.block.n2}) max_abs_error={r.max_abs_error:.3e}")
    bad = run.first_failure
    if bad is not None:
        print(f"verification failed: first failing block n1={bad.block.n1}, n2={bad.block.n2}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(run.reports)} blocks agree within {run.tol:g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, FloatingPointError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: kuz <experiment> [options]."""

import argparse
import dataclasses
import sys

from .experiments import (
    ConfigError,
    DRIVERS,
    default_config,
    run_experiment,
    validate_config,
)
from .linalg import SolverError
from .stepper import DegeneracyError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits with status 2 by default; configuration errors are 1 here
        raise ConfigError(message)


def _ints(text):
    return tuple(int(p) for p in text.split(",") if p)


def _floats(text):
    return tuple(float(p) for p in text.split(",") if p)


def build_parser():
    parser = _Parser(
        prog="kuz",
        description="Finite element convergence experiments for the Kuznetsov equation",
    )
    sub = parser.add_subparsers(dest="experiment", metavar="experiment")
    for name in DRIVERS:
        p = sub.add_parser(name, help=f"run the {name} study")
        p.add_argument("--degree", type=_ints, help="polynomial degrees, comma separated")
        p.add_argument("--beta", type=_floats, help="damping values, comma separated")
        p.add_argument("--nx", type=_ints, help="cells per direction, comma separated")
        p.add_argument("--tau", type=_floats, help="time steps, comma separated")
        p.add_argument("--t-end", type=float, help="final time")
        p.add_argument("--out", help="write results to this CSV path")
        p.add_argument("--solver", choices=("iterative", "direct"))
        p.add_argument("--gamma-min", type=float, help="non-degeneracy abort threshold")
        p.add_argument("--kappa", type=float)
        p.add_argument("--c2", type=float, help="wave speed squared")
        p.add_argument("--ell", type=float, help="gradient coupling coefficient")
        p.add_argument("--c-sp", type=float, help="spatial amplitude of the smooth data")
        p.add_argument("--c-time", type=float, help="growth rate of the smooth data")
        p.add_argument("--cfl-const", type=float, help="constant in the step-size check")
        p.add_argument("--cfl-eps", type=float, help="exponent margin in the step-size check")
        p.add_argument("--full-errors", action="store_true",
                       help="accumulate the time-summed L6 gradient error (slower)")
        p.add_argument("--reproducible", action="store_true",
                       help="record that the run is meant for byte-identical output")
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved configuration and exit")
        p.add_argument("--config", help="key=value file; command line flags win")
        if name == "pulse":
            p.add_argument("--nx-ref", type=int, help="reference mesh cells per direction")
            p.add_argument("--tau-ref", type=float, help="reference step size")
    return parser


_FLAG_TO_FIELD = {
    "degree": "degrees",
    "beta": "betas",
    "nx": "nx_list",
    "tau": "taus",
}

_FILE_PARSERS = {
    "degrees": _ints, "nx_list": _ints, "nx_ref": int,
    "betas": _floats, "taus": _floats,
    "t_end": float, "gamma_min": float, "kappa": float, "c2": float,
    "ell": float, "c_sp": float, "c_time": float, "cfl_const": float,
    "cfl_eps": float, "tau_ref": float,
    "solver": str, "out": str,
    "full_errors": lambda s: s.lower() in ("1", "true", "yes"),
    "reproducible": lambda s: s.lower() in ("1", "true", "yes"),
}


def _load_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            key = _FLAG_TO_FIELD.get(key, key).replace("-", "_")
            if key not in _FILE_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown option {key!r}")
            try:
                values[key] = _FILE_PARSERS[key](val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def resolve_config(args):
    cfg = default_config(args.experiment)
    if getattr(args, "config", None):
        for key, val in _load_config_file(args.config).items():
            setattr(cfg, key, val)
    for flag, field in _FLAG_TO_FIELD.items():
        val = getattr(args, flag, None)
        if val is not None:
            setattr(cfg, field, val)
    for field in ("t_end", "out", "solver", "gamma_min", "kappa", "c2", "ell",
                  "c_sp", "c_time", "cfl_const", "cfl_eps", "nx_ref", "tau_ref"):
        val = getattr(args, field, None)
        if val is not None:
            setattr(cfg, field, val)
    if getattr(args, "full_errors", False):
        cfg.full_errors = True
    if getattr(args, "reproducible", False):
        cfg.reproducible = True
    return cfg


def _print_rows(result):
    for r in result.rows:
        bits = [f"{r.experiment} k={r.k} h={r.h:.4e} tau={r.tau:.4e}"
                f" beta={r.beta:g} t={r.t:g}"]
        if r.err_grad_dt is not None:
            bits.append(f"err_grad_dt={r.err_grad_dt:.6e}")
        if r.ebar is not None:
            bits.append(f"ebar={r.ebar:.6e}")
        if r.rate is not None:
            bits.append(f"rate={r.rate:.2f}")
        print("  ".join(bits))
    for key, val in result.info.items():
        print(f"# {key}: {val}")


def main(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.experiment is None:
            parser.print_help()
            return 1
        cfg = resolve_config(args)
        validate_config(cfg)
        if args.dry_run:
            for f in dataclasses.fields(cfg):
                print(f"{f.name} = {getattr(cfg, f.name)}")
            return 0
        result = run_experiment(cfg)
        _print_rows(result)
        if cfg.out:
            print(f"# wrote {cfg.out}")
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (DegeneracyError, SolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

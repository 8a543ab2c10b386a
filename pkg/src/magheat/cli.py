"""Command line entry point.

    magheat <experiment> [--config FILE] [--out DIR] [--seed N] [--sweep key=v1,v2,...]

The experiment can also be chosen with a flag (``--evolve``, ``--hardy``,
...), and the most used configuration keys have their own options, e.g.
``magheat --evolve --flux 0.5 --s-max 16 --ds 1e-3 --fit-window 10:16``.
Options override the configuration file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    EXPERIMENTS,
    SWEEP_AXES,
    ConfigError,
    load_config,
    parse_range,
    parse_window,
    schema_text,
    validate,
)
from .runner import run, sweep

# option -> (section, key, parser)
OVERRIDES = {
    "dimension": ("field", "dimension", int),
    "preset": ("field", "preset", str),
    "flux": ("field", "flux", float),
    "radius": ("field", "radius", float),
    "radii": ("nu", "radii", parse_range),
    "s": ("lambda", "s", parse_range),
    "s_max": ("evolve", "s_max", float),
    "ds": ("evolve", "ds", float),
    "fit_window": ("evolve", "fit_window", parse_window),
    "nodes": ("grid", "nodes", int),
    "weight": ("hardy", "weight", str),
    "R": ("hardy", "R", float),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magheat", description="Magnetic heat-decay experiments.")
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS, help="experiment to run")
    flags = p.add_mutually_exclusive_group()
    for name in EXPERIMENTS:
        flags.add_argument(f"--{name}", dest="flag_experiment", action="store_const", const=name,
                           help=f"same as the positional '{name}'")
    p.add_argument("--config", type=Path, help="INI configuration file")
    p.add_argument("--out", type=Path, help="output directory (default: <[run] out>/<experiment>-<hash>)")
    p.add_argument("--seed", type=int, help="seed of randomised trials")
    p.add_argument("--sweep", help=f"axis=v1,v2,... with axis in {', '.join(SWEEP_AXES)}")
    p.add_argument("--schema", action="store_true", help="print the configuration schema and exit")
    g = p.add_argument_group("configuration overrides")
    g.add_argument("--dimension", type=int)
    g.add_argument("--preset")
    g.add_argument("--flux", type=float)
    g.add_argument("--radius", type=float, help="support radius R of the field")
    g.add_argument("--radii", help="lo:hi:n radii of the nu profile")
    g.add_argument("--s", help="lo:hi:n values of s for the eigenvalue curve")
    g.add_argument("--s-max", dest="s_max", type=float)
    g.add_argument("--ds", type=float)
    g.add_argument("--fit-window", dest="fit_window", help="a:b fit window in s")
    g.add_argument("--nodes", type=int, help="radial grid nodes")
    g.add_argument("--weight", choices=("none", "log", "lw"))
    g.add_argument("--R", type=float, help="disc radius of mu_B")
    return p


def _apply_overrides(cfg, args):
    for opt, (sec, key, parse) in OVERRIDES.items():
        raw = getattr(args, opt)
        if raw is None:
            continue
        try:
            cfg.values[sec][key] = parse(raw) if isinstance(raw, str) and parse is not str else raw
        except ValueError as exc:
            raise ConfigError(f"--{opt.replace('_', '-')}: {exc}") from None
    if args.seed is not None:
        cfg.values["run"]["seed"] = args.seed
    validate(cfg)
    return cfg


def _parse_sweep(text: str):
    if "=" not in text:
        raise ConfigError("--sweep expects axis=v1,v2,...")
    axis, vals = text.split("=", 1)
    axis = axis.strip()
    if axis not in SWEEP_AXES:
        raise ConfigError(f"cannot sweep {axis!r}; sweepable: {', '.join(SWEEP_AXES)}")
    values = [v.strip() for v in vals.split(",") if v.strip()]
    try:
        values = [int(v) if axis == "nodes" else float(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"--sweep: {exc}") from None
    return axis, values


def _report(rec, stream):
    status = "PASS" if rec.passed else "FAIL"
    print(f"{rec.experiment}: {status}", file=stream)
    for a in rec.assertions:
        print(f"  {'PASS' if a.passed else 'FAIL'} {a.name}: measured={a.measured!r} theory={a.theory!r} "
              f"tol={a.tol!r} ({a.kind})", file=stream)
    if rec.error:
        print(f"  error: {rec.error}", file=stream)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        sys.stdout.write(schema_text())
        return 0
    experiment = args.experiment or args.flag_experiment
    if args.experiment and args.flag_experiment and args.experiment != args.flag_experiment:
        parser.error("conflicting experiments")
    if experiment is None:
        parser.error("no experiment given")
    try:
        cfg = _apply_overrides(load_config(args.config, experiment), args)
        out = args.out or Path(cfg["run"]["out"]) / f"{experiment}-{cfg.digest()[:8]}"
        if args.sweep:
            axis, values = _parse_sweep(args.sweep)
            records = sweep(cfg, axis, values, out)
            for v, rec in zip(values, records):
                print(f"{axis}={v!r}", end=" ")
                _report(rec, sys.stdout)
            print(f"sweep table: {out / 'sweep.csv'}")
            return 0 if all(r.passed for r in records) else 1
        rec = run(cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    _report(rec, sys.stdout)
    print(f"record: {out / 'record.json'}")
    print(json.dumps({"passed": rec.passed, "theory": rec.theory}, default=str))
    return 0 if rec.passed else 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``wavecell``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import scenarios as sc
from .linalg import FactorizationError
from .spectra import EigenConvergenceError, cut_cell_spectrum
from .timeint import InstabilityError

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _scenario(args, kind):
    if args.config:
        cfg = sc.load_config(args.config, kind)
    elif kind == "plate":
        cfg = sc.build_plate(args.seed if args.seed is not None else 0)
    else:
        cfg = sc.PRESETS[kind]()
    upd = {}
    if args.seed is not None and args.config:
        upd["seed"] = args.seed
    if args.dt is not None:
        upd["dt"] = args.dt
    if args.integrator is not None:
        upd["integrator"] = args.integrator
    if args.m is not None:
        upd["m"] = args.m
    if args.out is not None:
        upd["out_dir"] = args.out
    if getattr(args, "T", None) is not None:
        upd["T"] = args.T
    if getattr(args, "reference", False):
        upd["reference"] = "refined"
    return replace(cfg, **upd).validate()


def cmd_run(args, kind):
    cfg = _scenario(args, kind)
    report = sc.run(cfg)
    sys.stdout.write(report.to_text())
    return 0 if report.stable else EXIT_NUMERIC


def cmd_critical_dt(args):
    cfg = _scenario(args, args.scenario)
    if cfg.geometry == "spring-chain":
        system = sc.spring_chain_system(**cfg.chain)
        from .spectra import critical_dt
        rows = [critical_dt(system, s) for s in ("global", "explicit_subsystem")]
        rows = [(r.scope, r.omega_max, r.dt_crit) for r in rows]
    else:
        disc = sc.discretize(cfg)
        rows = [(scope, 2.0 / dt, dt) for scope, dt in sc.critical_report(disc).items()]
    _write_rows(args.out, "critical_dt.csv", ["scope", "omega_max", "dt_crit"], rows)
    return 0


def cmd_spectrum(args):
    etas = np.linspace(0.0, 1.0, args.n_eta) if args.eta is None else np.asarray(args.eta)
    rows = [(float(e), p, cut_cell_spectrum(float(e), p, args.depth, args.rho_f))
            for p in args.p for e in etas]
    _write_rows(args.out, "cutcell_spectrum.csv", ["eta", "p", "omega_max"], rows)
    return 0


def _write_rows(out, name, header, rows):
    if out is None:
        fh = sys.stdout
    else:
        Path(out).mkdir(parents=True, exist_ok=True)
        fh = open(Path(out) / name, "w", newline="")
    try:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def build_parser():
    ap = argparse.ArgumentParser(prog="wavecell", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value scenario file")
        p.add_argument("--dt", type=float)
        p.add_argument("--integrator", choices=sc.INTEGRATOR_KINDS)
        p.add_argument("--m", type=int, help="leap-frog substeps")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--T", type=float, help="end time")
        return p

    for name in ("spring-chain", "plate", "block3d"):
        p = common(sub.add_parser(name, help=f"run the {name} scenario"))
        p.add_argument("--reference", action="store_true",
                       help="compute the L2 error against a refined reference run")
        p.set_defaults(func=lambda a, k=name: cmd_run(a, k))

    p = common(sub.add_parser("critical-dt", help="critical time steps per scope"))
    p.add_argument("--scenario", choices=list(sc.PRESETS), default="plate")
    p.set_defaults(func=cmd_critical_dt)

    p = sub.add_parser("cutcell-spectrum", help="max eigenfrequency of a cut unit cell")
    p.add_argument("--p", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--eta", type=float, nargs="+")
    p.add_argument("--n-eta", type=int, default=21)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--rho-f", type=float, default=1e-6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (sc.ConfigError, FileNotFoundError) as exc:
        print(f"wavecell: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InstabilityError, FactorizationError, EigenConvergenceError, ArithmeticError) as exc:
        print(f"wavecell: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes::

    0  success, every monitor passed
    2  configuration error
    3  stability rejection (time step outside the documented bound)
    4  blow-up (non-finite coefficients)
    5  constraint drift
    6  monitor failure (decay, bootstrap or energy bound violated)
    7  verify failure
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .config import config_dict, parse_config, serialize_config
from .errors import BlowUpError, ConfigError, ConstraintDriftError, HypStripError, StabilityError

EXIT_CODES = {"ok": 0, "config": 2, "stability": 3, "blowup": 4, "drift": 5, "monitor": 6, "verify": 7}

SUBCOMMANDS = {"run-hydro": "hydro", "run-aniso": "aniso", "limit-sweep": "limit-sweep", "verify": "verify"}

log = logging.getLogger("hypstrip")


def _finite(obj):
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_finite(obj), fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _header(cfg, data_hash=None):
    h = {"config": config_dict(cfg)}
    if data_hash is not None:
        h["initial_data_sha256"] = data_hash
    return h


def run_monitored(cfg, out):
    from . import diagnostics as dg
    from .checkpoint import write_checkpoint
    from .grid import StripGrid
    from .hydro import make_initial_data
    from .pipeline import data_hash, monitored_run

    grid = StripGrid(cfg.N1, cfg.N2, cfg.Ny, cfg.period, workers=cfg.threads)
    aniso = cfg.system == "aniso"
    amp = cfg.delta0 if aniso else cfg.eps0
    u0, u1 = make_initial_data(cfg.family, amp, cfg.rho0, grid, seed=cfg.seed, u1_factor=cfg.u1_factor)
    header = _header(cfg, data_hash(u0.coeffs, u1.coeffs))
    if aniso:
        header["eps"] = cfg.eps
    res = monitored_run(grid, u0, u1, amp, cfg.rho0, cfg.dt, cfg.T, cfg.sample_every,
                        eps=cfg.eps if aniso else None, nonlinear=cfg.nonlinear)
    dg.write_jsonl(os.path.join(out, "diagnostics.jsonl"), res.records, header)
    dg.write_csv(os.path.join(out, "diagnostics.csv"), res.records, header)
    rate_ok = bool(np.isfinite(res.decay_rate) and res.decay_rate <= -dg.RATE) if cfg.T >= 16 else True
    summary = {
        "header": header,
        "decay_rate": res.decay_rate,
        "decay_rate_ok": rate_ok,
        "energy": vars(res.energy),
        "bootstrap": res.bootstrap,
        "all_C": all(r.C_holds for r in res.records),
        "all_H": all(r.H_holds for r in res.records),
        "max_constraint_residual": res.max_constraint_residual,
        "monitors_ok": res.monitors_ok and rate_ok,
        "torus_note": "periodic box of side period stands in for R^2; decay rates may depend on it",
    }
    _write_json(os.path.join(out, "summary.json"), summary)
    if cfg.checkpoint:
        f = res.final
        arrays = {"u": f.u.coeffs, "w": f.w.coeffs}
        write_checkpoint(os.path.join(out, "final.ckpt"), grid, f.t, cfg.system, arrays,
                         eps=cfg.eps if aniso else None, extra=header)
    if cfg.figures:
        from .plotting import plot_decay, plot_energy
        plot_decay(res.records, os.path.join(out, "decay.png"))
        plot_energy(res.records, os.path.join(out, "energy.png"))
    return EXIT_CODES["ok"] if summary["monitors_ok"] else EXIT_CODES["monitor"]


def run_sweep_cmd(cfg, out):
    from .limit import SweepPlan, run_sweep

    plan = SweepPlan(list(cfg.eps_list), N=cfg.N1, Ny=cfg.Ny, period=cfg.period, family=cfg.family,
                     eps0=cfg.eps0, rho0=cfg.rho0, seed=cfg.seed, u1_factor=cfg.u1_factor, dt=cfg.dt,
                     T=cfg.T, sample_every=cfg.sample_every, mismatch=cfg.mismatch)
    if cfg.N1 != cfg.N2:
        raise ConfigError("limit sweeps use a square grid (N1 == N2)", field="N2")
    rep = run_sweep(plan, workers=cfg.threads)
    rep.provenance["config"] = config_dict(cfg)
    rep.write_csv(os.path.join(out, "limit.csv"))
    with open(os.path.join(out, "limit_report.json"), "w") as fh:
        fh.write(rep.to_json() + "\n")
    if cfg.figures:
        from .plotting import plot_convergence
        plot_convergence(rep, os.path.join(out, "limit.png"))
    ok = all(s == "ok" for s in rep.status) and np.isfinite(rep.order) and rep.order >= 0.9
    return EXIT_CODES["ok"] if ok else EXIT_CODES["monitor"]


def run_verify(cfg, out):
    from .verify import run_all

    ok, checks = run_all(seed=cfg.seed)
    _write_json(os.path.join(out, "verify.json"), {"header": _header(cfg), "pass": ok, "checks": checks})
    for name, c in checks.items():
        print(f"{name}: {'PASS' if c['pass'] else 'FAIL'}")
    return EXIT_CODES["ok"] if ok else EXIT_CODES["verify"]


def dump_symbols(args):
    from .gevrey import NormSymbol, SymbolKind

    kind = SymbolKind(args.kind)
    kappas = np.arange(0, args.kmax + 1, dtype=float)
    sym = NormSymbol.build(args.rho, kappas, kind)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"symbols_{kind.name}_{args.rho!r}.csv")
    sym.to_csv(path)
    print(path)
    return 0


def run(cfg, out):
    """Execute the pipeline selected by ``cfg.system``; returns an exit code."""
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(serialize_config(cfg))
    try:
        if cfg.system in ("hydro", "aniso"):
            return run_monitored(cfg, out)
        if cfg.system == "limit-sweep":
            return run_sweep_cmd(cfg, out)
        return run_verify(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    except StabilityError as exc:
        print(f"stability rejection: {exc}", file=sys.stderr)
        return EXIT_CODES["stability"]
    except BlowUpError as exc:
        print(f"blow-up: {exc} (last valid t = {exc.last_valid_time})", file=sys.stderr)
        return EXIT_CODES["blowup"]
    except ConstraintDriftError as exc:
        print(f"constraint drift: {exc}", file=sys.stderr)
        return EXIT_CODES["drift"]


def build_parser():
    p = argparse.ArgumentParser(prog="hypstrip", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI-style config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    sp = sub.add_parser("dump-symbols")
    sp.add_argument("--rho", type=float, default=0.5)
    sp.add_argument("--kind", default="X", choices=["X", "Y-first-order", "Y-zeroth-order"])
    sp.add_argument("--kmax", type=int, default=16)
    sp.add_argument("--out", default="out")
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "dump-symbols":
        try:
            return dump_symbols(args)
        except HypStripError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CODES["config"]
    text = ""
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CODES["config"]
    overrides = list(args.override) + [f"system={SUBCOMMANDS[args.command]}"]
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    return run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

    python -m stochns <command> [--config PATH] [--seed N] [--workers N] [--out DIR] ...

Exit status: 0 on success, 1 on a validation error or failed check,
2 on a numeric failure (stiffness, overflow).
"""
import argparse
import glob
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis import (energy_inequality_residual, energy_series, envelope_check,
                       moment_series, read_moments_csv, write_energy_csv,
                       write_moments_csv, write_residual_csv)
from .config import RunConfig, load, validate
from .errors import ConfigError, DomainError, NumericError
from .harness import run_ensemble
from .rng import split_seed
from .solver import checkpoint_bytes, read_checkpoint, simulate, write_checkpoint
from .stationarity import default_dictionary, kb_report, write_kb_csv, write_kb_summary
from .trajectory import read_trajectory, write_trajectory


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common():
    p = Parser(add_help=False)
    # SUPPRESS keeps a flag given before the command from being reset after it
    p.add_argument("--config", default=argparse.SUPPRESS, help="TOML run configuration")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed override")
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="parallel workers")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    return p


def _floats(s):
    return float(s)


def build_parser():
    common = _common()
    ap = Parser(prog="stochns", parents=[common],
                description="Stochastic compressible Navier-Stokes laboratory")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", metavar="command", parser_class=Parser)
    sub.required = True

    sp = sub.add_parser("simulate", parents=[common], help="one trajectory")
    sp.add_argument("--resume", help="continue from this checkpoint")
    sp.add_argument("--checkpoint-every", type=int, default=0, help="snapshots between checkpoints")

    sub.add_parser("ensemble", parents=[common], help="run the ensemble and write the output tree")

    sp = sub.add_parser("moments", parents=[common], help="moment series E[E^m](t)")
    sp.add_argument("--m", type=int, nargs="+", required=True)
    sp.add_argument("--from", dest="src", help="existing ensemble directory")

    sp = sub.add_parser("kb", parents=[common], help="Krylov-Bogoliubov averages and gaps")
    sp.add_argument("--S", type=_floats, nargs="+", required=True)
    sp.add_argument("--tau", type=_floats, nargs="+", default=[0.0])
    sp.add_argument("--from", dest="src", help="existing ensemble directory")

    sp = sub.add_parser("check-energy", parents=[common], help="energy-inequality residual audit")
    sp.add_argument("--from", dest="src", help="existing ensemble directory")
    sp.add_argument("--sigma", type=float, default=3.0, help="allowed standard errors above 0")

    sp = sub.add_parser("check-envelope", parents=[common], help="moment decay envelope check")
    sp.add_argument("--Dm", type=float, required=True)
    sp.add_argument("--c1", type=float, required=True)
    sp.add_argument("--c2", type=float, required=True)
    sp.add_argument("--series", help="moment series CSV (default: compute from the ensemble)")
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--from", dest="src", help="existing ensemble directory")

    sp = sub.add_parser("report", parents=[common], help="ensemble tree plus KB tables and summary")
    sp.add_argument("--S", type=_floats, nargs="*", default=None)
    sp.add_argument("--tau", type=_floats, nargs="*", default=None)
    return ap


def _config(args):
    cfg = load(args.config) if getattr(args, "config", None) else validate(RunConfig())
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed must be >= 0, got {args.seed}")
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "out", None) is not None:
        cfg = cfg.with_out(args.out)
    return cfg


def _workers(args):
    w = getattr(args, "workers", 1)
    if w < 1:
        raise ConfigError(f"--workers must be >= 1, got {w}")
    return w


def _trajectories(args, cfg):
    if getattr(args, "src", None):
        paths = sorted(glob.glob(os.path.join(args.src, "traj_*", "trajectory.bin")))
        if not paths:
            raise DomainError(f"no trajectories under {args.src}")
        return [read_trajectory(p) for p in paths]
    res = run_ensemble(cfg, _workers(args))
    return res.trajectories


def cmd_simulate(args, cfg):
    out = cfg.run.out
    os.makedirs(out, exist_ok=True)
    resume = read_checkpoint(args.resume) if args.resume else None
    ck_path = os.path.join(out, "checkpoint.bin")
    if resume is None:
        init, seed = cfg.initial_state(), split_seed(cfg.master_seed, 0)
    else:
        init, seed = resume.state, resume.seed
    traj = simulate(init, cfg.run.T, cfg.run.stride, cfg.eos, cfg.step, cfg.noise, cfg.force,
                    seed, config_hash=cfg.hash(), resume=resume, checkpoint_path=ck_path,
                    checkpoint_every=args.checkpoint_every)
    write_energy_csv(os.path.join(out, "energy.csv"), traj)
    write_trajectory(os.path.join(out, "trajectory.bin"), traj)
    write_checkpoint(ck_path, traj.final_checkpoint)
    digest = hashlib.sha256(checkpoint_bytes(traj.final_checkpoint)).hexdigest()
    print(f"seed {traj.seed} steps {int(traj.steps[-1])} rejections {traj.rejections}")
    print(f"checkpoint sha256 {digest}")
    return 0


def cmd_ensemble(args, cfg):
    res = run_ensemble(cfg, _workers(args), cfg.run.out)
    m = res.manifest
    print(f"{m['completed']}/{m['ensemble']} trajectories completed, config {m['config_hash']}")
    return 0 if m["failed"] == 0 else 2


def cmd_moments(args, cfg):
    trajs = _trajectories(args, cfg)
    E = np.array([energy_series(t)["total"] for t in trajs])
    os.makedirs(cfg.run.out, exist_ok=True)
    for m in args.m:
        path = os.path.join(cfg.run.out, f"moments_m{m}.csv")
        write_moments_csv(path, moment_series(E, m, trajs[0].times))
        print(path)
    return 0


def cmd_kb(args, cfg):
    trajs = _trajectories(args, cfg)
    obs = default_dictionary(trajs[0].N, trajs[0].L)
    rows = []
    for t in trajs:
        rows.extend(kb_report(t, obs, args.S, args.tau))
    if not rows:
        raise DomainError("no (S, tau) combination fits inside the trajectory horizon")
    os.makedirs(cfg.run.out, exist_ok=True)
    write_kb_csv(os.path.join(cfg.run.out, "kb.csv"), rows)
    write_kb_summary(os.path.join(cfg.run.out, "kb_summary.json"), obs, rows)
    print(f"{len(rows)} rows written to {os.path.join(cfg.run.out, 'kb.csv')}")
    return 0


def cmd_check_energy(args, cfg):
    trajs = _trajectories(args, cfg)
    R = np.array([energy_inequality_residual(t, 0.0, t.horizon) for t in trajs])
    os.makedirs(cfg.run.out, exist_ok=True)
    write_residual_csv(os.path.join(cfg.run.out, "residuals.csv"),
                       [(0.0, t.horizon, r, t.seed) for t, r in zip(trajs, R)])
    mean = float(R.mean())
    se = float(R.std(ddof=1) / np.sqrt(R.size)) if R.size > 1 else 0.0
    ok = mean <= args.sigma * se + 1e-12 * max(1.0, abs(mean))
    print(f"mean residual {mean:.6e} stderr {se:.6e} over {R.size} trajectories: "
          f"{'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_check_envelope(args, cfg):
    if args.series:
        series = read_moments_csv(args.series)
    else:
        trajs = _trajectories(args, cfg)
        E = np.array([energy_series(t)["total"] for t in trajs])
        series = moment_series(E, args.m, trajs[0].times)
    res = envelope_check(series, args.Dm, args.c1, args.c2)
    if res.passed:
        print(f"envelope holds, worst margin {res.worst_margin:.6e} at t={res.worst_time!r}")
        return 0
    print(f"envelope violated at t={res.worst_time!r} (margin {res.worst_margin:.6e}); "
          f"{len(res.violations)} violating time(s): "
          + ", ".join(repr(t) for t in res.violations[:10]), file=sys.stderr)
    return 1


def cmd_report(args, cfg):
    from dataclasses import replace
    run = cfg.run
    if args.S is not None:
        run = replace(run, S=tuple(args.S))
    if args.tau is not None:
        run = replace(run, tau=tuple(args.tau))
    if not run.S:
        run = replace(run, S=(run.T / 2,), tau=run.tau or (run.stride,))
    cfg = replace(cfg, run=run)
    res = run_ensemble(cfg, _workers(args), cfg.run.out)
    trajs = res.trajectories
    R = [energy_inequality_residual(t, 0.0, t.horizon) for t in trajs]
    summary = {
        "config_hash": cfg.hash(),
        "completed": res.manifest["completed"],
        "failed": res.manifest["failed"],
        "residual_mean": float(np.mean(R)) if R else None,
        "final_moments": {str(m): float(s.mean[-1]) for m, s in res.moments.items()},
        "files": sorted(f for f in os.listdir(cfg.run.out)
                        if os.path.isfile(os.path.join(cfg.run.out, f))),
    }
    with open(os.path.join(cfg.run.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"report written to {cfg.run.out}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate, "ensemble": cmd_ensemble, "moments": cmd_moments,
    "kb": cmd_kb, "check-energy": cmd_check_energy, "check-envelope": cmd_check_envelope,
    "report": cmd_report,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:          # --help / --version
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

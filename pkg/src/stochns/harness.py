"""Ensemble execution and the on-disk output tree.

Trajectory i of an ensemble uses seed ``split_seed(master, i)``.  Each
trajectory runs in exactly one worker; results are consumed in index order
so the output tree depends only on (config, master seed)::

    out/
      config.toml                 canonical config
      manifest.json               hash, version, per-trajectory status
      traj_0000/energy.csv        one row per snapshot
      traj_0000/trajectory.bin    snapshot arrays
      traj_0000/checkpoint.bin    final solver state
      moments_m1.csv, ...         ensemble moment series
      residuals.csv               energy-inequality residual over [0, T]
      kb.csv, kb_summary.json     Krylov-Bogoliubov averages (if run.S set)
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import hashlib
import json
import multiprocessing
import os
import time

import numpy as np

from . import __version__
from .analysis import (energy_inequality_residual, energy_series, moment_series,
                       write_energy_csv, write_moments_csv, write_residual_csv)
from .config import serialize
from .errors import NonFiniteError, StiffnessFailure
from .rng import split_seed
from .solver import Checkpoint, simulate, write_checkpoint
from .stationarity import default_dictionary, kb_report, write_kb_csv, write_kb_summary
from .trajectory import write_trajectory

__all__ = ["split_seed", "run_trajectory", "run_ensemble", "EnsembleResult", "TrajectoryOutcome",
           "benchmark", "tree_digest"]


@dataclass
class TrajectoryOutcome:
    index: int
    seed: int
    status: str                 # ok, stiff or nonfinite
    trajectory: object = None
    message: str = ""
    last_state: object = None
    elapsed: float = 0.0


@dataclass
class EnsembleResult:
    outcomes: list
    moments: dict
    manifest: dict

    @property
    def trajectories(self):
        return [o.trajectory for o in self.outcomes if o.status == "ok"]


def run_trajectory(cfg, index):
    """Simulate member ``index`` of the ensemble described by ``cfg``."""
    seed = split_seed(cfg.master_seed, index)
    t0 = time.perf_counter()
    try:
        traj = simulate(
            cfg.initial_state(), cfg.run.T, cfg.run.stride, cfg.eos, cfg.step,
            cfg.noise, cfg.force, seed, config_hash=cfg.hash(),
        )
    except StiffnessFailure as exc:
        return TrajectoryOutcome(index, seed, "stiff", None, str(exc), exc.state,
                                 time.perf_counter() - t0)
    except NonFiniteError as exc:
        return TrajectoryOutcome(index, seed, "nonfinite", None, str(exc),
                                 getattr(exc, "state", None), time.perf_counter() - t0)
    return TrajectoryOutcome(index, seed, "ok", traj, elapsed=time.perf_counter() - t0)


def _job(args):
    cfg, index = args
    return run_trajectory(cfg, index)


def _outcomes(cfg, workers):
    jobs = [(cfg, i) for i in range(cfg.run.ensemble)]
    if workers <= 1 or len(jobs) == 1:
        return [_job(j) for j in jobs]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        # map yields in submission order whatever the completion order
        return list(pool.map(_job, jobs, chunksize=1))


def _failure_summary(out):
    st = out.last_state
    if st is None:
        return None
    return {"t": float(st.t), "rho_min": float(st.rho.min()), "rho_max": float(st.rho.max()),
            "u_absmax": float(np.abs(st.u).max())}


def run_ensemble(cfg, workers=1, out=None):
    """Run the ensemble, write the output tree (if ``out``) and return results.

    Stiffness or overflow in one member is recorded in the manifest; the
    rest of the ensemble is unaffected.
    """
    outcomes = _outcomes(cfg, workers)
    ok = [o for o in outcomes if o.status == "ok"]
    times = ok[0].trajectory.times if ok else np.zeros(0)
    energies = np.array([energy_series(o.trajectory)["total"] for o in ok]) if ok else None
    moments = {}
    if energies is not None:
        for m in cfg.run.moments:
            moments[m] = moment_series(energies, m, times)

    entries = []
    for o in outcomes:
        e = {"index": o.index, "seed": int(o.seed), "status": o.status}
        if o.status == "ok":
            tr = o.trajectory
            e.update(steps=int(tr.steps[-1]), rejections=int(tr.rejections))
        else:
            e.update(message=o.message, last_state=_failure_summary(o))
        entries.append(e)
    manifest = {
        "code_version": __version__,
        "config_hash": cfg.hash(),
        "master_seed": int(cfg.master_seed),
        "ensemble": cfg.run.ensemble,
        "completed": len(ok),
        "failed": len(outcomes) - len(ok),
        "nu_eff": cfg.step.nu_eff,
        "noise_tail": cfg.noise.tail(),
        "trajectories": entries,
    }
    result = EnsembleResult(outcomes, moments, manifest)
    if out is not None:
        write_tree(cfg, result, out)
    return result


def write_tree(cfg, result, out):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.toml"), "w") as fh:
        fh.write(serialize(cfg, include_out=False))
    residual_rows = []
    kb_rows = []
    observables = default_dictionary(cfg.grid.N, cfg.grid.L)
    for o in result.outcomes:
        d = os.path.join(out, f"traj_{o.index:04d}")
        os.makedirs(d, exist_ok=True)
        if o.status != "ok":
            if o.last_state is not None:
                write_checkpoint(os.path.join(d, "failure_state.bin"), Checkpoint(
                    o.last_state, np.zeros(4, dtype=np.uint64), np.zeros(cfg.noise.K),
                    np.zeros(4), 0, 0, 0, cfg.run.stride, cfg.hash(), o.seed,
                    cfg.eos, cfg.noise, cfg.step, cfg.force,
                ))
            continue
        tr = o.trajectory
        write_energy_csv(os.path.join(d, "energy.csv"), tr)
        write_trajectory(os.path.join(d, "trajectory.bin"), tr)
        write_checkpoint(os.path.join(d, "checkpoint.bin"), tr.final_checkpoint)
        residual_rows.append((0.0, tr.horizon, energy_inequality_residual(tr, 0.0, tr.horizon),
                              int(o.seed)))
        if cfg.run.S:
            kb_rows.extend(kb_report(tr, observables, cfg.run.S, cfg.run.tau or (0.0,)))
    for m, s in result.moments.items():
        write_moments_csv(os.path.join(out, f"moments_m{m}.csv"), s)
    write_residual_csv(os.path.join(out, "residuals.csv"), residual_rows)
    if cfg.run.S:
        write_kb_csv(os.path.join(out, "kb.csv"), kb_rows)
        write_kb_summary(os.path.join(out, "kb_summary.json"), observables, kb_rows)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(result.manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def tree_digest(out):
    """SHA-256 over every relative path and file body under ``out``, sorted."""
    h = hashlib.sha256()
    for root, dirs, files in os.walk(out):
        dirs.sort()
        for name in sorted(files):
            p = os.path.join(root, name)
            h.update(os.path.relpath(p, out).encode() + b"\0")
            with open(p, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def benchmark(cfg, workers=(1, 8), out=None):
    """Wall-clock ensemble time per worker count, plus the output tree digests.

    Returns ``{w: (seconds, digest)}``; digests are None when ``out`` is None.
    Trees go to ``out/w{w}``.  One untimed trajectory runs first so kernel
    loading is not charged to the first worker count.
    """
    run_trajectory(cfg, 0)
    res = {}
    for w in workers:
        d = None if out is None else os.path.join(out, f"w{w}")
        t0 = time.perf_counter()
        run_ensemble(cfg, w, d)
        res[w] = (time.perf_counter() - t0, None if d is None else tree_digest(d))
    return res

"""Moment decay from two initial energies in ratio 100:1, with a fitted envelope.

Calibration ensembles fix (D, c1, c2); fresh validation ensembles are then
checked against the frozen envelope.  Moment series go to --out.

    python3 scripts/boundedness.py --n 64 --T 20 --out bounded
"""
import argparse
import math
import os

import numpy as np

from stochns.analysis import (energy, energy_series, envelope_check, fit_envelope,
                              moment_series, write_moments_csv)
from stochns.config import parse
from stochns.eos import EosParams
from stochns.harness import run_ensemble
from stochns.solver import FluidState, Grid

TEMPLATE = """
[grid]
N = {N}
[noise]
K = 16
f0 = {f0!r}
seed = {seed}
[step]
mu = {mu!r}
[init]
kind = "perturbed"
u_amp = {u_amp!r}
[run]
T = {T!r}
stride = {stride!r}
ensemble = {n}
"""


def moments(args, seed, u_amp, n):
    cfg = parse(TEMPLATE.format(**{**vars(args), "seed": seed, "u_amp": u_amp, "n": n}))
    res = run_ensemble(cfg, args.workers)
    E = np.array([energy_series(t)["total"] for t in res.trajectories])
    t = res.trajectories[0].times
    return {m: moment_series(E, m, t) for m in args.m}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--n", type=int, default=64, help="validation ensemble size")
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--stride", type=float, default=0.1)
    ap.add_argument("--mu", type=float, default=0.01)
    ap.add_argument("--f0", type=float, default=1.0)
    ap.add_argument("--low", type=float, default=0.5, help="velocity amplitude of the low start")
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="bounded")
    args = ap.parse_args()

    g = Grid(args.N)
    unit = np.sin(np.pi * g.nodes)
    unit[0] = unit[-1] = 0.0
    eos = EosParams()
    Ep = energy(FluidState(np.full(args.N, 0.5), np.zeros(args.N + 1)), eos, 0.0).total
    Ek = energy(FluidState(np.full(args.N, 0.5), unit), eos, 0.0).total - Ep
    high = math.sqrt((100 * (Ep + args.low**2 * Ek) - Ep) / Ek)
    print(f"velocity amplitudes: low {args.low}, high {high:.4f}")

    cal = [moments(args, 11, high, args.n // 2), moments(args, 12, args.low, args.n // 2)]
    val = {"high": moments(args, 21, high, args.n), "low": moments(args, 22, args.low, args.n)}
    os.makedirs(args.out, exist_ok=True)
    for m in args.m:
        D, c1, c2 = fit_envelope([c[m] for c in cal])
        print(f"m={m}: D={D:.4g} c1=c2={c2:.6g} exp(-D T)={math.exp(-D * args.T):.2e}")
        for name, series in val.items():
            r = envelope_check(series[m], D, c1, c2)
            write_moments_csv(os.path.join(args.out, f"moments_{name}_m{m}.csv"), series[m])
            print(f"  {name:4s}: E0 {series[m].mean[0]:.6g} final {series[m].mean[-1]:.6g} "
                  f"envelope {'holds' if r.passed else 'violated'} (worst margin {r.worst_margin:.3e})")
        fh, fl = val["high"][m].mean[-1], val["low"][m].mean[-1]
        print(f"  final-time relative gap {abs(fh - fl) / fl:.3e}")


if __name__ == "__main__":
    main()

"""KB averages of the density pairing for ensembles with different total mass.

    python3 scripts/mass_sectors.py --rho0 0.3 0.6 --n 16 --S 10
"""
import argparse

import numpy as np

from stochns.config import parse
from stochns.harness import run_ensemble
from stochns.stationarity import Observable, kb_average

TEMPLATE = """
[grid]
N = {N}
[noise]
K = 16
f0 = 1.0
seed = {seed}
[init]
kind = "perturbed"
rho0 = {rho0!r}
amp = {amp!r}
u_amp = 2.0
[run]
T = {T!r}
stride = 0.05
ensemble = {n}
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho0", type=float, nargs="+", default=[0.3, 0.6])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--S", type=float, default=10.0)
    ap.add_argument("--amp", type=float, default=0.2)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    xi = np.sin(np.pi * (np.arange(args.N) + 0.5) / args.N)
    obs = Observable("bounded_density_pairing", xi, name="rho_sin1")
    ranges = []
    for i, rho0 in enumerate(args.rho0):
        cfg = parse(TEMPLATE.format(seed=100 + i, rho0=rho0, N=args.N, n=args.n, T=args.T,
                                    amp=args.amp))
        trajs = run_ensemble(cfg, args.workers).trajectories
        v = np.array([kb_average(t, obs, args.S) for t in trajs])
        lo, hi = v.mean() - 3 * v.std(ddof=1), v.mean() + 3 * v.std(ddof=1)
        ranges.append((lo, hi))
        print(f"mass {rho0:.3f}: KB average {v.mean():.6f}, 3-sigma range [{lo:.6f}, {hi:.6f}]")
    ranges.sort()
    disjoint = all(a[1] < b[0] for a, b in zip(ranges, ranges[1:]))
    print("ranges disjoint" if disjoint else "ranges overlap")


if __name__ == "__main__":
    main()

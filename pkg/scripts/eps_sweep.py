"""Sweep the dissipation-functional weight eps and report max |D - E| / sqrt(E).

    python3 scripts/eps_sweep.py --eps 0.001 0.01 0.1 --n 8
"""
import argparse
import math

from stochns.analysis import dissipation_ratio
from stochns.config import parse
from stochns.harness import run_ensemble

CONFIG = """
[grid]
N = {N}
[noise]
K = 16
f0 = 1.0
seed = 7
[init]
kind = "perturbed"
amp = 0.2
u_amp = 2.0
[run]
T = {T!r}
stride = 0.05
ensemble = {n}
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.001, 0.003, 0.01, 0.03, 0.1])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    trajs = run_ensemble(parse(CONFIG.format(**vars(args))), args.workers).trajectories
    M = float(trajs[0].rho[0].sum() * trajs[0].h)
    print(f"{'eps':>8s} {'max ratio':>12s} {'bound C':>12s}")
    for eps in args.eps:
        worst = max(dissipation_ratio(t, eps) for t in trajs)
        C = eps * math.sqrt(2.0 * M) * 2.0 * M
        print(f"{eps:8.4g} {worst:12.4e} {C:12.4e}")


if __name__ == "__main__":
    main()

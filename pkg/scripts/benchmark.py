"""Ensemble wall-clock time per worker count and output-tree identity.

    python3 scripts/benchmark.py --workers 1 8 --n 64 --T 50 --out bench
"""
import argparse
import os

from stochns.config import parse
from stochns.harness import benchmark

CONFIG = """
[grid]
N = {N}
[noise]
K = 16
f0 = 1.0
seed = 2024
[init]
kind = "perturbed"
amp = 0.2
u_amp = 2.0
[run]
T = {T!r}
stride = 0.1
ensemble = {n}
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 8])
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--T", type=float, default=50.0)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--out", default="bench")
    args = ap.parse_args()

    cfg = parse(CONFIG.format(**vars(args)))
    print(f"{os.cpu_count()} CPU(s) available")
    res = benchmark(cfg, args.workers, args.out)
    base = res[args.workers[0]][0]
    for w, (sec, digest) in res.items():
        print(f"workers {w:3d}: {sec:8.2f} s  speedup {base / sec:5.2f}x  tree {digest[:16]}")
    digests = {d for _, d in res.values()}
    print("output trees identical" if len(digests) == 1 else "output trees DIFFER")


if __name__ == "__main__":
    main()

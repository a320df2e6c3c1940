"""Measure the sound speed of a small standing wave and compare with sqrt(p'(rho0)).

    python3 scripts/acoustic.py --N 256 --T 3
"""
import argparse
import math

import numpy as np

from stochns.eos import EosParams, pressure_derivative
from stochns.solver import FluidState, Grid, StepParams, simulate


def crossing_speed(traj, xi, L):
    m = traj.rho * 0.5 * (traj.u[:, 1:] + traj.u[:, :-1]) @ xi * traj.h
    t = traj.times
    s = np.sign(m)
    k = np.nonzero(s[1:] * s[:-1] < 0)[0]
    tz = t[k] - m[k] * (t[k + 1] - t[k]) / (m[k + 1] - m[k])
    # successive zero crossings of the fundamental are half a period 2L/c apart
    return L / np.diff(tz).mean()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--L", type=float, default=1.0)
    ap.add_argument("--T", type=float, default=3.0)
    ap.add_argument("--stride", type=float, default=0.002)
    ap.add_argument("--rho0", type=float, default=0.5)
    ap.add_argument("--amp", type=float, default=1e-4)
    ap.add_argument("--mu", type=float, default=0.01)
    args = ap.parse_args()

    eos = EosParams()
    g = Grid(args.N, args.L)
    s = FluidState(args.rho0 + args.amp * np.cos(np.pi * g.centers / args.L),
                   np.zeros(args.N + 1), 0.0, args.L)
    tr = simulate(s, args.T, args.stride, eos, StepParams(mu=args.mu))
    c = crossing_speed(tr, np.sin(np.pi * g.centers / args.L), args.L)
    exact = math.sqrt(pressure_derivative(args.rho0, eos))
    print(f"measured c = {c:.6f}, sqrt(p'(rho0)) = {exact:.6f}, rel err {abs(c - exact) / exact:.2e}")


if __name__ == "__main__":
    main()

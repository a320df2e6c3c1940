"""Staggered finite-volume solver for the 1D stochastic barotropic system.

Densities live in N cells of width h = L/N, velocities on the N+1 cell faces
(the two wall faces are pinned to zero).  One step is split into

1. upwind continuity update (exactly mass conservative); the transport
   velocity is u - dt dp/dx / rho, a pressure predictor from the old state
   that keeps the deterministic scheme energy-decreasing step by step,
2. upwind convection of momentum on the dual mesh,
3. explicit pressure gradient with the updated density,
4. deterministic force, Euler-Maruyama noise increment,
5. implicit viscous solve with no-slip rows.

The inner loops live in ``_kernels``; this module wraps them with the
bookkeeping needed for trajectories and checkpoints.
"""
from dataclasses import dataclass, field
import json
import struct

import numpy as np

from . import _kernels as K
from .errors import DomainError, NonFiniteError, RetryHalveDt, StiffnessFailure
from .eos import EosParams
from .forcing import ForceSpec, NoiseSpec
from .rng import Stream
from .trajectory import Trajectory


@dataclass(frozen=True)
class Grid:
    N: int = 128
    L: float = 1.0

    def __post_init__(self):
        if self.N < 4:
            raise DomainError(f"grid needs N >= 4 cells, got {self.N}")
        if not self.L > 0:
            raise DomainError(f"domain length must be > 0, got {self.L}")

    @property
    def h(self):
        return self.L / self.N

    @property
    def centers(self):
        return (np.arange(self.N) + 0.5) * self.h

    @property
    def nodes(self):
        return np.arange(self.N + 1) * self.h


@dataclass
class FluidState:
    rho: np.ndarray
    u: np.ndarray
    t: float = 0.0
    L: float = 1.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.rho.size + 1,):
            raise DomainError(
                f"velocity needs {self.rho.size + 1} nodes, got shape {self.u.shape}"
            )
        if self.u[0] != 0.0 or self.u[-1] != 0.0:
            raise DomainError("wall velocities must be exactly zero")

    @property
    def grid(self):
        return Grid(self.rho.size, self.L)

    def copy(self):
        return FluidState(self.rho.copy(), self.u.copy(), self.t, self.L)

    def validate(self, eos, guard=0.0):
        if not np.all(np.isfinite(self.rho)) or not np.all(np.isfinite(self.u)):
            raise DomainError("state contains non-finite values")
        if np.any(self.rho <= 0) or np.any(self.rho >= eos.rho_bar - guard):
            raise DomainError(
                f"density range [{self.rho.min()!r}, {self.rho.max()!r}] "
                f"outside (0, {eos.rho_bar - guard!r})"
            )


@dataclass(frozen=True)
class StepParams:
    mu: float = 0.01
    lam: float = 0.0
    cfl: float = 0.5
    guard: float | None = None
    dt_max: float = 0.01
    max_halvings: int = 40

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"shear viscosity mu must be > 0, got {self.mu}")
        if not self.lam >= 0:
            raise DomainError(f"bulk viscosity lambda must be >= 0, got {self.lam}")
        if not 0 < self.cfl <= 1:
            raise DomainError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.guard is not None and not self.guard >= 0:
            raise DomainError(f"guard must be >= 0, got {self.guard}")
        if not self.dt_max > 0:
            raise DomainError(f"dt_max must be > 0, got {self.dt_max}")

    @property
    def nu_eff(self):
        # 1D stress: d=1 kills the deviatoric part, keep mu active on purpose
        return self.mu + self.lam

    def guard_band(self, eos):
        return 1e-6 * eos.rho_bar if self.guard is None else self.guard


def pack(grid, eos, params, noise, force):
    fp = np.array([
        grid.h, grid.L, eos.a, eos.gamma, eos.beta, eos.rho_bar,
        params.nu_eff, params.cfl, params.guard_band(eos), params.dt_max,
        noise.alpha, force.value,
    ])
    ip = np.array([grid.N, noise.K, force.code, params.max_halvings], dtype=np.int64)
    coef = (noise.coefficients[:, None] * noise.modes(grid.nodes)).T
    coef[0] = 0.0
    coef[-1] = 0.0
    return fp, ip, np.ascontiguousarray(coef)


def _defaults(noise, force, L):
    if noise is None:
        noise = NoiseSpec(K=0, L=L)
    if force is None:
        force = ForceSpec()
    return noise, force


def stable_dt(state, params, eos):
    """CFL-limited step: acoustic, viscous-explicit and hard-cap limits."""
    grid = state.grid
    noise, force = _defaults(None, None, grid.L)
    fp, ip, _ = pack(grid, eos, params, noise, force)
    return float(K.stable_dt(state.rho, state.u, fp, ip))


def step(state, dt, increments, params, eos, noise=None, force=None, acc=None):
    """Advance ``state`` by one step of length dt using the given increments.

    Raises RetryHalveDt when the new density enters the guard band (or loses
    positivity), NonFiniteError on overflow.  When ``acc`` is a length-4
    array, the step's dissipation, force work, Ito correction and martingale
    increments are added to it.
    """
    grid = state.grid
    noise, force = _defaults(noise, force, grid.L)
    fp, ip, coef = pack(grid, eos, params, noise, force)
    dW = np.asarray(increments, dtype=float).reshape(noise.K)
    rho_out = np.empty(grid.N)
    u_out = np.empty(grid.N + 1)
    inc = np.zeros(K.N_ACC + 1)
    sqcoef = np.sum(coef**2, axis=1)
    status, idx, term = K.try_step(
        state.rho, state.u, float(dt), dW, fp, ip, coef, sqcoef, rho_out, u_out, inc
    )
    if status == K.REJECTED:
        raise RetryHalveDt(int(idx), float(rho_out[idx]))
    if status == K.NONFINITE:
        raise NonFiniteError(int(idx), K.TERMS[term])
    if acc is not None:
        acc += inc[:K.N_ACC]
    return FluidState(rho_out, u_out, state.t + dt, state.L)


def total_mass(state):
    return float(np.sum(state.rho) * state.grid.h)


def mass_fraction_ok(state, eos, delta):
    """True when the mean density stays at least ``delta`` below rho_bar."""
    return total_mass(state) / state.L <= eos.rho_bar - delta


@dataclass
class Checkpoint:
    state: FluidState
    rng_state: np.ndarray
    W: np.ndarray
    acc: np.ndarray
    steps: int
    rejections: int
    snapshot_index: int
    stride: float
    config_hash: str = ""
    seed: int = 0
    eos: EosParams = field(default_factory=EosParams)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    params: StepParams = field(default_factory=StepParams)
    force: ForceSpec = field(default_factory=ForceSpec)


def simulate(initial, T, stride, eos, params, noise=None, force=None, seed=0, *,
             config_hash="", resume=None, checkpoint_path=None, checkpoint_every=0):
    """Integrate one sample path and record snapshots every ``stride``.

    Snapshot j sits at time j*stride.  ``resume`` continues from a
    Checkpoint and reproduces the uninterrupted run bit for bit.
    """
    if not T > 0 or not stride > 0:
        raise DomainError(f"need T > 0 and stride > 0, got T={T}, stride={stride}")
    J = int(round(T / stride))
    if J < 1 or abs(J * stride - T) > 1e-9 * T:
        raise DomainError(f"horizon {T} is not a positive multiple of stride {stride}")
    grid = initial.grid
    noise, force = _defaults(noise, force, grid.L)
    if noise.L != grid.L:
        raise DomainError(f"noise modes built for L={noise.L}, grid has L={grid.L}")
    fp, ip, coef = pack(grid, eos, params, noise, force)

    if resume is None:
        state = initial.copy()
        state.validate(eos, params.guard_band(eos))
        stream = Stream(seed=seed)
        W = np.zeros(noise.K)
        acc = np.zeros(K.N_ACC)
        counters = np.zeros(2, dtype=np.int64)
        j0 = 0
    else:
        state = resume.state.copy()
        stream = Stream(state=resume.rng_state)
        W = resume.W.copy()
        acc = resume.acc.copy()
        counters = np.array([resume.steps, resume.rejections], dtype=np.int64)
        j0 = resume.snapshot_index
        seed = resume.seed
        if abs(resume.stride - stride) > 0:
            raise DomainError("checkpoint stride differs from requested stride")

    n_snap = J - j0 + 1
    if n_snap < 1:
        raise DomainError(f"checkpoint at snapshot {j0} is beyond horizon {T}")
    times = np.arange(j0, J + 1) * stride
    rho_s = np.empty((n_snap, grid.N))
    u_s = np.empty((n_snap, grid.N + 1))
    W_s = np.empty((n_snap, noise.K))
    acc_s = np.empty((n_snap, K.N_ACC))
    steps_s = np.empty(n_snap, dtype=np.int64)

    def record(i):
        rho_s[i] = state.rho
        u_s[i] = state.u
        W_s[i] = W
        acc_s[i] = acc
        steps_s[i] = counters[0]

    record(0)
    t = float(state.t)
    for i in range(1, n_snap):
        target = times[i]
        status, t, idx, term = K.advance(
            state.rho, state.u, t, target, stream.state, W, acc, counters, fp, ip, coef
        )
        state.t = t
        if status == K.STIFF:
            raise StiffnessFailure(
                f"more than {params.max_halvings} step halvings near t={t!r} "
                f"(cell {idx}); seed {seed}",
                state.copy(),
            )
        if status == K.NONFINITE:
            err = NonFiniteError(int(idx), K.TERMS[term])
            err.state = state.copy()
            raise err
        state.t = target
        record(i)
        if checkpoint_path is not None and checkpoint_every and (j0 + i) % checkpoint_every == 0:
            write_checkpoint(checkpoint_path, Checkpoint(
                state.copy(), stream.state.copy(), W.copy(), acc.copy(),
                int(counters[0]), int(counters[1]), j0 + i, stride, config_hash,
                seed, eos, noise, params, force,
            ))

    traj = Trajectory(
        times=times, rho=rho_s, u=u_s, W=W_s,
        dissipation=acc_s[:, 0].copy(), force_work=acc_s[:, 1].copy(),
        ito_correction=acc_s[:, 2].copy(), martingale=acc_s[:, 3].copy(),
        steps=steps_s, L=grid.L, stride=stride, eos=eos, nu=params.nu_eff,
        seed=seed, config_hash=config_hash, rejections=int(counters[1]),
    )
    traj.final_checkpoint = Checkpoint(
        state.copy(), stream.state.copy(), W.copy(), acc.copy(),
        int(counters[0]), int(counters[1]), J, stride, config_hash, seed,
        eos, noise, params, force,
    )
    return traj


# Checkpoint byte layout (all integers and floats little-endian):
#   8 bytes   magic b"SNSCKPT1"
#   8 bytes   uint64 header length H
#   H bytes   UTF-8 JSON header, keys sorted
#   N   f64   rho
#   N+1 f64   u
#   K   f64   cumulative Wiener coordinates
#   4   f64   cumulative dissipation, force work, Ito correction, martingale
MAGIC = b"SNSCKPT1"


def _checkpoint_header(ck):
    st = ck.state
    return {
        "config_hash": ck.config_hash,
        "seed": int(ck.seed),
        "grid": {"N": int(st.rho.size), "L": float(st.L).hex()},
        "eos": {k: float(getattr(ck.eos, k)).hex() for k in ("a", "gamma", "beta", "rho_bar")},
        "noise": {
            "K": int(ck.noise.K), "f0": float(ck.noise.f0).hex(),
            "q": float(ck.noise.q).hex(), "alpha": float(ck.noise.alpha).hex(),
        },
        "step": {
            "mu": float(ck.params.mu).hex(), "lam": float(ck.params.lam).hex(),
            "cfl": float(ck.params.cfl).hex(), "dt_max": float(ck.params.dt_max).hex(),
            "guard": None if ck.params.guard is None else float(ck.params.guard).hex(),
            "max_halvings": int(ck.params.max_halvings),
        },
        "force": {"kind": ck.force.kind, "value": float(ck.force.value).hex()},
        "step_counter": int(ck.steps),
        "rejections": int(ck.rejections),
        "rng_state": [f"{int(w):016x}" for w in ck.rng_state],
        "t": float(st.t).hex(),
        "snapshot_index": int(ck.snapshot_index),
        "stride": float(ck.stride).hex(),
    }


def checkpoint_bytes(ck):
    header = json.dumps(_checkpoint_header(ck), sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes()
        for a in (ck.state.rho, ck.state.u, ck.W, ck.acc)
    )
    return MAGIC + struct.pack("<Q", len(header)) + header + body


def write_checkpoint(path, ck):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(ck))


def read_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise DomainError(f"{path}: not a checkpoint file")
    (hlen,) = struct.unpack("<Q", data[8:16])
    hdr = json.loads(data[16:16 + hlen].decode())
    N = hdr["grid"]["N"]
    Kn = hdr["noise"]["K"]
    arr = np.frombuffer(data[16 + hlen:], dtype="<f8").astype(float)
    if arr.size != N + (N + 1) + Kn + K.N_ACC:
        raise DomainError(f"{path}: payload size does not match header")
    rho, u = arr[:N], arr[N:2 * N + 1]
    W = arr[2 * N + 1:2 * N + 1 + Kn]
    acc = arr[2 * N + 1 + Kn:]
    fx = float.fromhex
    L = fx(hdr["grid"]["L"])
    eos = EosParams(**{k: fx(v) for k, v in hdr["eos"].items()})
    nz = hdr["noise"]
    noise = NoiseSpec(K=Kn, f0=fx(nz["f0"]), q=fx(nz["q"]), alpha=fx(nz["alpha"]), L=L,
                      seed=hdr["seed"])
    sp = hdr["step"]
    params = StepParams(
        mu=fx(sp["mu"]), lam=fx(sp["lam"]), cfl=fx(sp["cfl"]), dt_max=fx(sp["dt_max"]),
        guard=None if sp["guard"] is None else fx(sp["guard"]),
        max_halvings=sp["max_halvings"],
    )
    force = ForceSpec(kind=hdr["force"]["kind"], value=fx(hdr["force"]["value"]),
                      alpha=noise.alpha)
    state = FluidState(rho.copy(), u.copy(), fx(hdr["t"]), L)
    rng_state = np.array([int(w, 16) for w in hdr["rng_state"]], dtype=np.uint64)
    return Checkpoint(
        state, rng_state, W.copy(), acc.copy(), hdr["step_counter"], hdr["rejections"],
        hdr["snapshot_index"], fx(hdr["stride"]), hdr["config_hash"], hdr["seed"],
        eos, noise, params, force,
    )

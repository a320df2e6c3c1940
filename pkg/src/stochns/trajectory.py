"""Sampled trajectories and their on-disk form."""
from dataclasses import dataclass, field, fields, replace
import json
import struct

import numpy as np

from .eos import EosParams
from .errors import DomainError


@dataclass
class Trajectory:
    """Snapshots of one sample path on a uniform time grid.

    The four cumulative series integrate, over the fine solver steps,
    the viscous dissipation, the work of the deterministic force, the Ito
    correction 1/2 sum_k int rho |F_k|^2 and the stochastic integral
    sum_k int (int rho F_k u) dW_k.  All are zero at the first snapshot
    of an unshifted path.
    """

    times: np.ndarray          # (J+1,)
    rho: np.ndarray            # (J+1, N)
    u: np.ndarray              # (J+1, N+1)
    W: np.ndarray              # (J+1, K)
    dissipation: np.ndarray    # (J+1,)
    force_work: np.ndarray
    ito_correction: np.ndarray
    martingale: np.ndarray
    steps: np.ndarray          # accepted solver steps up to each snapshot
    L: float
    stride: float
    eos: EosParams
    nu: float
    seed: int = 0
    config_hash: str = ""
    rejections: int = 0
    final_checkpoint: object = field(default=None, repr=False, compare=False)

    def __len__(self):
        return self.times.size

    @property
    def N(self):
        return self.rho.shape[1]

    @property
    def h(self):
        return self.L / self.N

    @property
    def horizon(self):
        return float(self.times[-1] - self.times[0])

    def index_of(self, tau):
        """Snapshot offset for a time lag that must sit on the stride grid."""
        m = int(round(tau / self.stride))
        if m < 0 or abs(m * self.stride - tau) > 1e-9 * max(1.0, abs(tau)):
            raise DomainError(f"time {tau!r} is not a nonnegative multiple of stride {self.stride!r}")
        return m

    def slice(self, start, stop=None):
        """Snapshots [start, stop) with times, noise and integrals rebased."""
        stop = len(self) if stop is None else stop
        if not 0 <= start < stop <= len(self):
            raise DomainError(f"snapshot window [{start}, {stop}) outside 0..{len(self)}")
        sl = slice(start, stop)

        def rebase(a):
            return a[sl] - a[start]

        return replace(
            self,
            times=self.times[sl] - self.times[start],
            rho=self.rho[sl], u=self.u[sl], W=rebase(self.W),
            dissipation=rebase(self.dissipation), force_work=rebase(self.force_work),
            ito_correction=rebase(self.ito_correction), martingale=rebase(self.martingale),
            steps=self.steps[sl] - self.steps[start], final_checkpoint=None,
        )

    def state(self, j):
        from .solver import FluidState
        return FluidState(self.rho[j].copy(), self.u[j].copy(), float(self.times[j]), self.L)


# Trajectory byte layout (little-endian):
#   8 bytes  magic b"SNSTRAJ1"
#   8 bytes  uint64 header length H
#   H bytes  UTF-8 JSON header (sorted keys): shapes, scalars, eos
#   arrays in the order of _ARRAYS, each as raw f8 (steps as i8)
MAGIC = b"SNSTRAJ1"
_ARRAYS = ("times", "rho", "u", "W", "dissipation", "force_work",
           "ito_correction", "martingale", "steps")


def trajectory_bytes(traj):
    hdr = {
        "shapes": {k: list(getattr(traj, k).shape) for k in _ARRAYS},
        "L": float(traj.L).hex(), "stride": float(traj.stride).hex(),
        "nu": float(traj.nu).hex(), "seed": int(traj.seed),
        "config_hash": traj.config_hash, "rejections": int(traj.rejections),
        "eos": {k: float(getattr(traj.eos, k)).hex() for k in ("a", "gamma", "beta", "rho_bar")},
    }
    head = json.dumps(hdr, sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(
        np.ascontiguousarray(getattr(traj, k), dtype="<i8" if k == "steps" else "<f8").tobytes()
        for k in _ARRAYS
    )
    return MAGIC + struct.pack("<Q", len(head)) + head + body


def write_trajectory(path, traj):
    with open(path, "wb") as fh:
        fh.write(trajectory_bytes(traj))


def read_trajectory(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise DomainError(f"{path}: not a trajectory file")
    (hlen,) = struct.unpack("<Q", data[8:16])
    hdr = json.loads(data[16:16 + hlen].decode())
    off = 16 + hlen
    arrays = {}
    for k in _ARRAYS:
        shape = tuple(hdr["shapes"][k])
        n = int(np.prod(shape)) if shape else 1
        dt = "<i8" if k == "steps" else "<f8"
        arrays[k] = np.frombuffer(data, dtype=dt, count=n, offset=off).reshape(shape).copy()
        off += 8 * n
    fx = float.fromhex
    return Trajectory(
        **{k: arrays[k].astype(np.int64 if k == "steps" else float) for k in _ARRAYS},
        L=fx(hdr["L"]), stride=fx(hdr["stride"]), nu=fx(hdr["nu"]), seed=hdr["seed"],
        config_hash=hdr["config_hash"], rejections=hdr["rejections"],
        eos=EosParams(**{k: fx(v) for k, v in hdr["eos"].items()}),
    )


def same_trajectory(a, b):
    """Bitwise equality of every recorded array and scalar."""
    if trajectory_bytes(a) != trajectory_bytes(b):
        return False
    return all(
        np.array_equal(getattr(a, f.name), getattr(b, f.name))
        for f in fields(a) if f.name in _ARRAYS
    )

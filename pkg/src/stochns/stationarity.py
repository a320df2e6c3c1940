"""Time shifts, Krylov-Bogoliubov averages and stationarity diagnostics.

Laws on trajectory space are probed through a finite dictionary of bounded
observables.  An observable at snapshot j looks at the window of ``window``
strides starting there and squashes the result with tanh, so every value
lies in [-1, 1].
"""
from dataclasses import dataclass
import json

import numpy as np

from .analysis import total_energy, write_csv
from .errors import ConfigError, DomainError

KINDS = ("bounded_momentum_pairing", "bounded_energy", "bounded_density_pairing")


@dataclass(frozen=True)
class Observable:
    kind: str
    xi: tuple = None          # test field at cell centres, None for energy
    window: int = 1           # in strides
    scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown observable kind {self.kind!r}; expected one of {KINDS}")
        if self.window < 1:
            raise DomainError(f"observable window must be >= 1 stride, got {self.window}")
        if not self.scale > 0:
            raise DomainError(f"squash scale must be > 0, got {self.scale}")
        if self.kind != "bounded_energy" and self.xi is None:
            raise ConfigError(f"{self.kind} needs a test field xi")
        if self.xi is not None:
            object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))

    def describe(self):
        return {"name": self.name, "kind": self.kind, "window": self.window,
                "scale": self.scale, "xi": None if self.xi is None else list(self.xi)}


def default_dictionary(N, L=1.0, modes=4, window=1, scale=1.0):
    """Density and momentum pairings against sin(k pi x / L), k <= modes, plus energy."""
    x = (np.arange(N) + 0.5) * (L / N)
    out = []
    for kind, tag in (("bounded_density_pairing", "rho"), ("bounded_momentum_pairing", "mom")):
        for k in range(1, modes + 1):
            out.append(Observable(kind, np.sin(k * np.pi * x / L), window, scale, f"{tag}_sin{k}"))
    out.append(Observable("bounded_energy", None, window, scale, "energy"))
    return out


def _raw(traj, obs):
    if obs.kind == "bounded_energy":
        return total_energy(traj)
    xi = np.asarray(obs.xi)
    if xi.size != traj.N:
        raise DomainError(f"test field has {xi.size} samples, trajectory has {traj.N} cells")
    if obs.kind == "bounded_density_pairing":
        q = traj.rho
    else:
        q = traj.rho * 0.5 * (traj.u[:, 1:] + traj.u[:, :-1])
    return q @ xi * traj.h


def observable_series(traj, obs):
    """Observable values at every snapshot origin that leaves room for the window.

    Pairings are averaged over [t_j, t_j + window*stride] by the trapezoid
    rule; the energy observable reads E(t_j).
    """
    raw = _raw(traj, obs)
    n = len(traj) - obs.window
    if n < 1:
        raise DomainError(f"trajectory has {len(traj)} snapshots, window needs {obs.window + 1}")
    if obs.kind == "bounded_energy":
        val = raw[:n]
    else:
        w = np.ones(obs.window + 1)
        w[0] = w[-1] = 0.5
        w /= obs.window
        val = np.convolve(raw, w, mode="valid")  # w is symmetric
        val = val[:n]
    return np.tanh(obs.scale * val)


def shift(traj, tau):
    """S_tau: states from t + tau on, Wiener path and integrals rebased to 0."""
    m = traj.index_of(tau)
    if m >= len(traj):
        raise DomainError(f"shift {tau!r} leaves no snapshots (horizon {traj.horizon!r})")
    return traj.slice(m)


def _count(traj, S):
    J = traj.index_of(S)
    if J < 1:
        raise DomainError(f"averaging horizon must be >= one stride, got {S!r}")
    return J


def _need(traj, obs, snapshots, what):
    if snapshots > len(traj):
        raise DomainError(
            f"{what} needs {snapshots - 1} strides ({(snapshots - 1) * traj.stride!r} time units), "
            f"trajectory has {len(traj) - 1} ({traj.horizon!r})"
        )


def kb_average(traj, obs, S, series=None):
    """(1/J) sum_{j<J} obs(S_{t_j} traj) with J = S / stride."""
    J = _count(traj, S)
    _need(traj, obs, J + obs.window, f"kb_average over S={S!r} with window {obs.window}")
    v = observable_series(traj, obs) if series is None else series
    return float(np.mean(v[:J]))


def stationarity_gap(traj, obs, tau, S, series=None):
    """|nu_S(F; S_tau traj) - nu_S(F; traj)|."""
    J = _count(traj, S)
    m = traj.index_of(tau)
    _need(traj, obs, m + J + obs.window, f"stationarity_gap with tau={tau!r}, S={S!r}")
    v = observable_series(traj, obs) if series is None else series
    return float(abs(np.mean(v[m:m + J]) - np.mean(v[:J])))


def kb_convergence(traj, obs, S_list):
    """Cauchy differences |nu_{S_{i+1}} - nu_{S_i}| along the horizons."""
    S_list = list(S_list)
    if not S_list:
        return []
    _need(traj, obs, _count(traj, max(S_list)) + obs.window, f"kb_convergence up to S={max(S_list)!r}")
    v = observable_series(traj, obs)
    avg = [kb_average(traj, obs, S, v) for S in S_list]
    return [abs(b - a) for a, b in zip(avg, avg[1:])]


def ergodic_dispersion(trajs, obs, S):
    """Unbiased sample variance of the per-trajectory KB averages."""
    if len(trajs) < 2:
        raise DomainError(f"ergodic_dispersion needs >= 2 trajectories, got {len(trajs)}")
    vals = [kb_average(t, obs, S) for t in trajs]
    return float(np.var(vals, ddof=1))


def mix(w, a, b):
    """Convex combination w a + (1 - w) b of two averages."""
    if not 0 <= w <= 1:
        raise DomainError(f"mixing weight must lie in [0, 1], got {w!r}")
    return w * a + (1.0 - w) * b


@dataclass
class KBRow:
    observable_id: str
    S: float
    value: float
    gap_tau: float
    gap_value: float
    seed: int


def kb_report(traj, observables, S_list, tau_list):
    """One KBRow per (observable, S, tau) combination that fits the horizon."""
    rows = []
    for obs in observables:
        v = observable_series(traj, obs)
        for S in S_list:
            try:
                val = kb_average(traj, obs, S, v)
            except DomainError:
                continue
            for tau in tau_list:
                try:
                    gap = stationarity_gap(traj, obs, tau, S, v)
                except DomainError:
                    continue
                rows.append(KBRow(obs.name, float(S), val, float(tau), gap, int(traj.seed)))
    return rows


def write_kb_csv(path, rows):
    write_csv(path, ("observable_id", "S", "value", "gap_tau", "gap_value", "seed"),
              ((r.observable_id, r.S, r.value, r.gap_tau, r.gap_value, r.seed) for r in rows))


def write_kb_summary(path, observables, rows):
    """JSON with the dictionary definitions and the mean value per (observable, S)."""
    agg = {}
    for r in rows:
        agg.setdefault((r.observable_id, r.S), {}).setdefault(r.seed, r.value)
    summary = {
        "dictionary": [o.describe() for o in observables],
        "averages": [
            {"observable_id": k[0], "S": k[1], "mean": float(np.mean(list(v.values()))),
             "n": len(v)}
            for k, v in sorted(agg.items())
        ],
    }
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")

"""Energy bookkeeping, residual audits and moment statistics.

Quadratic forms follow the solver's dual mesh: the kinetic energy of cell i
is 1/2 rho_i (u_i**2 + u_{i+1}**2)/2, i.e. the face values of |u|**2 are
averaged to the cell.  With this choice the cell sum equals the node sum
the momentum update dissipates, so energy audits close without an O(h**2)
offset.
"""
from dataclasses import dataclass
import csv
import math

import numpy as np

from .eos import pressure, pressure_potential
from .errors import ConfigError, DomainError, NumericError


@dataclass(frozen=True)
class EnergyReport:
    t: float
    kinetic: float
    potential: float
    total: float
    dissipation: float
    mass: float
    rho_min: float
    rho_max: float

    FIELDS = ("t", "kinetic", "potential", "total", "dissipation", "mass", "rho_min", "rho_max")

    def row(self):
        return [getattr(self, f) for f in self.FIELDS]


def energy_density(rho, m, eos):
    """E(rho, m): 1/2 m^2/rho + P(rho), 0 at (0, 0), infinite for (0, m != 0)."""
    if math.isnan(rho) or math.isnan(m):
        raise NumericError("NaN passed to energy_density")
    if rho == 0.0:
        return 0.0 if m == 0.0 else math.inf
    return 0.5 * m * m / rho + float(pressure_potential(rho, eos))


def _nu(params):
    return getattr(params, "nu_eff", params)


def _kinetic(rho, u, h):
    return 0.5 * np.sum(rho * 0.5 * (u[..., 1:] ** 2 + u[..., :-1] ** 2), axis=-1) * h


def _dissipation_rate(u, h, nu):
    return nu * np.sum(np.diff(u, axis=-1) ** 2, axis=-1) / h


def energy(state, eos, params):
    """EnergyReport for one state; ``params`` is a StepParams or a viscosity."""
    rho, u = state.rho, state.u
    if np.isnan(rho).any() or np.isnan(u).any():
        raise NumericError("NaN in state passed to energy")
    h = state.L / rho.size
    kin = float(_kinetic(rho, u, h))
    pot = float(np.sum(pressure_potential(rho, eos)) * h)
    return EnergyReport(
        t=float(state.t), kinetic=kin, potential=pot, total=kin + pot,
        dissipation=float(_dissipation_rate(u, h, _nu(params))),
        mass=float(np.sum(rho) * h), rho_min=float(rho.min()), rho_max=float(rho.max()),
    )


def energy_series(traj):
    """Per-snapshot energy report columns as a dict of arrays."""
    h = traj.h
    kin = _kinetic(traj.rho, traj.u, h)
    pot = np.sum(pressure_potential(traj.rho, traj.eos), axis=1) * h
    return {
        "t": traj.times, "kinetic": kin, "potential": pot, "total": kin + pot,
        "dissipation": _dissipation_rate(traj.u, h, traj.nu),
        "mass": np.sum(traj.rho, axis=1) * h,
        "rho_min": traj.rho.min(axis=1), "rho_max": traj.rho.max(axis=1),
    }


def total_energy(traj):
    return energy_series(traj)["total"]


def bogovskii_1d(f, h):
    """Right inverse of d/dx with zero boundary values for zero-mean cell data.

    Returns node values B_j = h * sum_{i<j} f_i, j = 0..N.
    """
    f = np.asarray(f, dtype=float)
    mean = float(np.sum(f) * h)
    norm1 = float(np.sum(np.abs(f)) * h)
    if abs(mean) > 1e-10 * norm1:
        raise DomainError(f"Bogovskii input must have zero mean, got integral {mean!r}")
    B = np.zeros(f.size + 1)
    np.cumsum(f * h, out=B[1:])
    return B


def dissipation_functional(state, eos, eps, M, total=None):
    """E - eps * int rho u . B[rho - M/L], velocity and B averaged to cells."""
    if not eps >= 0:
        raise DomainError(f"eps must be >= 0, got {eps!r}")
    h = state.L / state.rho.size
    if total is None:
        total = energy(state, eos, 0.0).total
    if eps == 0:
        return total
    B = bogovskii_1d(state.rho - M / state.L, h)
    u_c = 0.5 * (state.u[1:] + state.u[:-1])
    B_c = 0.5 * (B[1:] + B[:-1])
    return total - eps * float(np.sum(state.rho * u_c * B_c) * h)


def dissipation_ratio(traj, eps):
    """Largest |D - E| / sqrt(E) over the snapshots of a trajectory."""
    E = total_energy(traj)
    M = float(np.sum(traj.rho[0]) * traj.h)
    worst = 0.0
    for j in range(len(traj)):
        D = dissipation_functional(traj.state(j), traj.eos, eps, M, total=E[j])
        worst = max(worst, abs(D - E[j]) / math.sqrt(E[j]))
    return worst


def _window(traj, tau1, tau2):
    if tau2 < tau1:
        raise DomainError(f"window [{tau1}, {tau2}] is reversed")
    t0 = traj.times[0]
    return traj.index_of(tau1 - t0), traj.index_of(tau2 - t0)


def energy_inequality_residual(traj, tau1, tau2, include_ito=True, energies=None):
    """Pathwise residual of the energy inequality on [tau1, tau2].

    R = E(tau2) - E(tau1) + int dissipation - int rho g.u
        - 1/2 sum_k int rho |F_k|^2 - sum_k int (int rho F_k.u) dW_k,

    with the time integrals taken from the solver's fine-step accumulators.
    The inequality asserts R <= 0.
    """
    i, j = _window(traj, tau1, tau2)
    E = total_energy(traj) if energies is None else energies

    def delta(a):
        return a[j] - a[i]

    R = E[j] - E[i] + delta(traj.dissipation) - delta(traj.force_work) - delta(traj.martingale)
    if include_ito:
        R -= delta(traj.ito_correction)
    return float(R)


def _renormalization(b):
    if isinstance(b, str):
        kind, arg = (b.split(":", 1) + [None])[:2] if ":" in b else (b, None)
    else:
        kind, arg = b[0], (b[1] if len(b) > 1 else None)
    if kind == "id":
        return (lambda r: r), (lambda r: np.ones_like(r))
    if kind == "xlogx":
        return (lambda r: r * np.log(r)), (lambda r: np.log(r) + 1.0)
    if kind == "const":
        c = float(arg)
        return (lambda r: np.full_like(r, c)), (lambda r: np.zeros_like(r))
    raise ConfigError(f"unknown renormalization {b!r}; expected id, xlogx or const:c")


def _trapezoid(y, dt):
    if y.size < 2:
        return 0.0
    return float(dt * (np.sum(y) - 0.5 * (y[0] + y[-1])))


def renorm_residual(traj, b, psi, tau1, tau2):
    """Discrete residual of the renormalized continuity equation on [tau1, tau2].

    ``psi`` is sampled at cell centres; gradients use centred differences on
    the staggered grid and time integrals use the trapezoid rule on snapshots.
    """
    i, j = _window(traj, tau1, tau2)
    bf, dbf = _renormalization(b)
    psi = np.asarray(psi, dtype=float)
    h = traj.h
    rho = traj.rho[i:j + 1]
    u = traj.u[i:j + 1]
    brho = bf(rho)
    dpsi = np.diff(psi) / h                       # interior nodes 1..N-1
    b_node = 0.5 * (brho[:, 1:] + brho[:, :-1])
    transport = np.sum(b_node * u[:, 1:-1] * dpsi, axis=1) * h
    div_u = np.diff(u, axis=1) / h
    compress = np.sum((dbf(rho) * rho - brho) * div_u * psi, axis=1) * h
    mass_b = np.sum(brho * psi, axis=1) * h
    return float(mass_b[-1] - mass_b[0] - _trapezoid(transport, traj.stride)
                 + _trapezoid(compress, traj.stride))


def gronwall_bound(F0, C, D, t):
    """exp(-D t)(F0 - C/D) + C/D, the envelope of F' <= -D F + C."""
    if not D > 0:
        raise DomainError(f"decay rate D must be > 0, got {D!r}")
    if np.any(np.asarray(t) < 0):
        raise DomainError("t must be >= 0")
    out = np.exp(-D * np.asarray(t, dtype=float)) * (F0 - C / D) + C / D
    return float(out) if out.ndim == 0 else out


@dataclass
class MomentSeries:
    m: int
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    size: int

    def __post_init__(self):
        if self.size < 2:
            self.stderr = np.full_like(np.asarray(self.mean, dtype=float), np.nan)


def moment_series(energies, m, times):
    """Ensemble moment E[E(t)^m] from an (n_traj, n_times) energy array."""
    E = np.asarray(energies, dtype=float) ** m
    n = E.shape[0]
    mean = E.mean(axis=0)
    se = E.std(axis=0, ddof=1) / math.sqrt(n) if n >= 2 else np.full(E.shape[1], np.nan)
    return MomentSeries(m=m, times=np.asarray(times, dtype=float), mean=mean, stderr=se, size=n)


def sup_moment(energies, m):
    """Ensemble mean of max over snapshots of E^m (diagnostic only)."""
    return float(np.mean(np.max(np.asarray(energies, dtype=float) ** m, axis=1)))


@dataclass(frozen=True)
class EnvelopeResult:
    passed: bool
    worst_margin: float
    worst_time: float
    violations: tuple


def envelope(series, D_m, c1, c2):
    return np.exp(-D_m * (series.times - series.times[0])) * (series.mean[0] + c1) + c2


def envelope_check(series, D_m, c1, c2):
    """mean(t) <= exp(-D_m t)(mean(0) + c1) + c2 + 2 stderr(t) at every time."""
    if not D_m > 0:
        raise DomainError(f"D_m must be > 0, got {D_m!r}")
    se = np.nan_to_num(np.asarray(series.stderr, dtype=float), nan=0.0)
    margin = envelope(series, D_m, c1, c2) + 2.0 * se - series.mean
    k = int(np.argmin(margin))
    bad = tuple(float(t) for t in series.times[margin < 0])
    return EnvelopeResult(not bad, float(margin[k]), float(series.times[k]), bad)


def fit_envelope(calibration, safety=0.8, tail=0.25, slack=0.1):
    """Envelope constants (D, c1, c2) covering every calibration series.

    c2 is the late-time plateau (mean + 2 stderr over the last ``tail``
    fraction of times) inflated by ``slack``; c1 equals c2; D is ``safety``
    times the largest rate for which the envelope covers all series.
    """
    c2 = 0.0
    for s in calibration:
        k = max(1, int(len(s.times) * tail))
        se = np.nan_to_num(s.stderr[-k:], nan=0.0)
        c2 = max(c2, float(np.max(s.mean[-k:] + 2.0 * se)))
    c2 *= 1.0 + slack
    c1 = c2
    D = math.inf
    for s in calibration:
        t = s.times - s.times[0]
        excess = s.mean - c2
        mask = (t > 0) & (excess > 0)
        if np.any(mask):
            rates = -np.log(excess[mask] / (s.mean[0] + c1)) / t[mask]
            D = min(D, float(np.min(rates)))
    if not math.isfinite(D):
        # every calibration curve is below the plateau after t = 0
        D = min(float(-math.log(0.5) / (s.times[1] - s.times[0])) for s in calibration)
    return safety * D, c1, c2


def pressure_weight_integral(traj, omega, tau1, tau2):
    """int int p(rho) (rho_bar - rho)^(-omega) dx dt over the window."""
    beta = traj.eos.beta
    if not 0 < omega <= (beta - 3.0) / 2.0:
        raise DomainError(f"omega must lie in (0, {(beta - 3.0) / 2.0}], got {omega!r}")
    i, j = _window(traj, tau1, tau2)
    rho = traj.rho[i:j + 1]
    w = pressure(rho, traj.eos) * (traj.eos.rho_bar - rho) ** (-omega)
    return _trapezoid(np.sum(w, axis=1) * traj.h, traj.stride)


def defect_decay_envelope(D0, theta, r, t):
    """Supersolution of D' + theta D^r <= 0: (D0^(1-r) + theta (r-1) t)^(-1/(r-1))."""
    if not r > 1:
        raise DomainError(f"exponent r must be > 1, got {r!r}")
    if not theta > 0 or D0 < 0 or np.any(np.asarray(t) < 0):
        raise DomainError("need theta > 0, D0 >= 0, t >= 0")
    t = np.asarray(t, dtype=float)
    if D0 == 0:
        out = np.zeros_like(t)
    else:
        # scaled form, no overflow of D0**(1-r) for tiny D0
        out = D0 * (1.0 + theta * (r - 1.0) * D0 ** (r - 1.0) * t) ** (-1.0 / (r - 1.0))
    return float(out) if out.ndim == 0 else out


# CSV schemas --------------------------------------------------------------

def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def write_energy_csv(path, traj):
    s = energy_series(traj)
    cols = EnergyReport.FIELDS
    write_csv(path, cols, zip(*(s[c] for c in cols)))


def write_moments_csv(path, series):
    write_csv(path, ("t", "mean", "stderr", "m", "ensemble_size"),
              ((t, mu, se, series.m, series.size)
               for t, mu, se in zip(series.times, series.mean, series.stderr)))


def read_moments_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DomainError(f"{path}: empty moment series")
    return MomentSeries(
        m=int(rows[0]["m"]),
        times=np.array([float(r["t"]) for r in rows]),
        mean=np.array([float(r["mean"]) for r in rows]),
        stderr=np.array([float(r["stderr"]) for r in rows]),
        size=int(rows[0]["ensemble_size"]),
    )


def write_residual_csv(path, rows):
    """rows of (tau1, tau2, residual, seed)."""
    write_csv(path, ("tau1", "tau2", "residual", "seed"), rows)

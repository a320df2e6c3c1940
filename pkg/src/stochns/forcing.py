"""Truncated cylindrical Wiener process, noise coefficients and driving force.

The noise acts on the momentum balance through K sine modes,

    F_k(x, rho, u) = f_k * sin(k pi x / L) * s_alpha(u),
    f_k = f0 * k**(-q),
    s_alpha(u) = u * (1 + u**2)**((alpha - 1) / 2),

so |F_k| <= f_k (1 + |u|**alpha) and F_k vanishes at both walls.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError
from .rng import Stream


@dataclass(frozen=True)
class NoiseSpec:
    K: int = 16
    f0: float = 0.5
    q: float = 1.0
    alpha: float = 0.5
    L: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.K < 0:
            raise DomainError(f"K must be >= 0, got {self.K}")
        if self.f0 < 0:
            raise DomainError(f"f0 must be >= 0, got {self.f0}")
        if not self.q > 0.5:
            raise DomainError(f"q must be > 1/2, got {self.q}")
        if not 0 <= self.alpha < 1:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.L > 0:
            raise DomainError(f"L must be > 0, got {self.L}")

    @property
    def coefficients(self):
        """f_k for k = 1..K."""
        return self.f0 * np.arange(1, self.K + 1, dtype=float) ** (-self.q)

    def tail(self):
        """Neglected noise energy sum_{k>K} f_k**2."""
        return self.f0**2 * float(special.zeta(2 * self.q, self.K + 1))

    def modes(self, x):
        """phi_k(x) for k = 1..K, shape (K, len(x))."""
        k = np.arange(1, self.K + 1, dtype=float)[:, None]
        return np.sin(k * np.pi * np.asarray(x, dtype=float)[None, :] / self.L)


@dataclass(frozen=True)
class ForceSpec:
    """Deterministic force g; ``kind`` is one of zero, constant, drag."""

    kind: str = "zero"
    value: float = 0.0
    alpha: float = 0.5

    KINDS = ("zero", "constant", "drag")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown force kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "drag" and self.value < 0:
            raise ConfigError(f"drag coefficient must be >= 0, got {self.value}")

    @property
    def code(self):
        return self.KINDS.index(self.kind)

    @property
    def bound(self):
        """C with |g| <= C (1 + |u|**alpha)."""
        return 0.0 if self.kind == "zero" else abs(self.value)


@dataclass(frozen=True)
class WienerPath:
    dt: float
    increments: np.ndarray  # (K, J)
    seed: int

    @property
    def K(self):
        return self.increments.shape[0]

    @property
    def times(self):
        return self.dt * np.arange(self.increments.shape[1] + 1)

    @property
    def values(self):
        """Cumulative coordinates W_k(t_j), shape (K, J+1), with W(0) = 0."""
        W = np.zeros((self.K, self.increments.shape[1] + 1))
        np.cumsum(self.increments, axis=1, out=W[:, 1:])
        return W

    def shift(self, steps):
        """Path t -> W(t + tau) - W(tau) for tau = steps * dt."""
        if not 0 <= steps <= self.increments.shape[1]:
            raise DomainError(f"shift of {steps} steps outside the path")
        return WienerPath(self.dt, self.increments[:, steps:].copy(), self.seed)


def s_alpha(u, alpha):
    u = np.asarray(u, dtype=float)
    return u * (1.0 + u * u) ** (0.5 * (alpha - 1.0))


def sample_increments(dt, K, stream):
    """K independent N(0, dt) increments drawn from ``stream``."""
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt!r}")
    return np.sqrt(dt) * stream.normals(K)


def sample_path(dt, K, J, seed):
    """WienerPath of J uniform steps of length dt."""
    stream = Stream(seed=seed)
    inc = np.empty((K, J))
    for j in range(J):
        inc[:, j] = sample_increments(dt, K, stream)
    return WienerPath(dt, inc, seed)


def diffusion_coefficient(k, x, rho, u, spec):
    """F_k(x, rho, u); rho is accepted for the interface but unused."""
    if not 1 <= k <= spec.K:
        raise DomainError(f"mode index {k} outside 1..{spec.K}")
    fk = spec.f0 * float(k) ** (-spec.q)
    phi = np.sin(k * np.pi * np.asarray(x, dtype=float) / spec.L)
    out = fk * phi * s_alpha(u, spec.alpha)
    return float(out) if np.ndim(out) == 0 else out


def deterministic_force(x, rho, u, gspec):
    u = np.asarray(u, dtype=float)
    shape = np.broadcast(np.asarray(x), np.asarray(rho), u).shape
    if gspec.kind == "zero":
        out = np.zeros(shape)
    elif gspec.kind == "constant":
        out = np.full(shape, float(gspec.value))
    elif gspec.kind == "drag":
        out = np.broadcast_to(-gspec.value * s_alpha(u, gspec.alpha), shape).copy()
    else:  # pragma: no cover - guarded by ForceSpec
        raise ConfigError(f"unknown force kind {gspec.kind!r}")
    return float(out) if out.ndim == 0 else out


def u0_norm(coeffs):
    """Norm of sum_k coeffs[k-1] e_k in the auxiliary space U_0."""
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(1, c.size + 1, dtype=float)
    return float(np.sqrt(np.sum((c / k) ** 2)))

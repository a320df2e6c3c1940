"""Hard-sphere barotropic pressure law.

The concrete family is

    p(rho) = a * rho**gamma * (rho_bar - rho)**(-beta),

which is C^1 on [0, rho_bar), vanishes at zero, is strictly increasing,
satisfies p'(rho) >= a rho**(gamma - 1) and blows up at the limit density
with (rho_bar - rho)**beta * p(rho) -> a * rho_bar**gamma.

All functions accept scalars or numpy arrays and return the same shape.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-13


@dataclass(frozen=True)
class EosParams:
    a: float = 1.0
    gamma: float = 2.0
    beta: float = 4.0
    rho_bar: float = 1.0
    p_bar: float = field(init=False)

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"pressure scale a must be > 0, got {self.a!r}")
        if not self.gamma > 1:
            raise DomainError(f"gamma must be > 1, got {self.gamma!r}")
        if not self.beta > 3:
            raise DomainError(f"beta must be > 3, got {self.beta!r}")
        if not self.rho_bar > 0:
            raise DomainError(f"rho_bar must be > 0, got {self.rho_bar!r}")
        object.__setattr__(self, "p_bar", self.a * self.rho_bar**self.gamma)


def _check_density(rho, params):
    r = np.asarray(rho, dtype=float)
    bad = ~((r >= 0) & (r < params.rho_bar))
    if np.any(bad):
        offending = r[bad].flat[0] if r.ndim else float(r)
        raise DomainError(
            f"density {offending!r} outside [0, {params.rho_bar!r})"
        )
    return r


def _out(value, like):
    return float(value) if np.ndim(like) == 0 else value


def pressure(rho, params):
    """Pressure p(rho) for 0 <= rho < rho_bar."""
    r = _check_density(rho, params)
    p = params.a * r**params.gamma * (params.rho_bar - r) ** (-params.beta)
    return _out(p, rho)


def pressure_derivative(rho, params):
    """Analytic dp/drho."""
    r = _check_density(rho, params)
    a, g, b, rb = params.a, params.gamma, params.beta, params.rho_bar
    gap = rb - r
    dp = a * g * r ** (g - 1) * gap ** (-b) + a * b * r**g * gap ** (-b - 1)
    return _out(dp, rho)


def sound_speed(rho, params):
    return _out(np.sqrt(pressure_derivative(rho, params)), rho)


def _potential_closed_form(r, params):
    # gamma == 2: rho * int_0^rho a (rho_bar - s)^(-beta) ds
    a, b, rb = params.a, params.beta, params.rho_bar
    integral = rb ** (1 - b) * np.expm1((1 - b) * np.log1p(-r / rb)) / (b - 1)
    return a * r * integral


def _quad(f, lo, hi, **kw):
    res = integrate.quad(
        f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200,
        full_output=1, **kw,
    )
    value, err = res[0], res[1]
    if len(res) > 3 and err > 1e-10 * max(1.0, abs(value)):
        raise QuadratureError("pressure-potential quadrature did not converge", err)
    return value


def _potential_quad(r, params):
    """rho * int_0^rho p(s)/s^2 ds by adaptive Gauss-Kronrod quadrature."""
    if r == 0.0:
        return 0.0
    a, g, b, rb = params.a, params.gamma, params.beta, params.rho_bar
    half = 0.5 * r
    # [0, rho/2]: algebraic weight s^(gamma-2) absorbs the endpoint behaviour
    left = _quad(lambda s: a * (rb - s) ** (-b), 0.0, half, weight="alg",
                 wvar=(g - 2.0, 0.0))
    # [rho/2, rho] in v = log(rho_bar - s); smooth even when rho is close to rho_bar
    right = _quad(
        lambda v: a * (rb - math.exp(v)) ** (g - 2.0) * math.exp(v * (1.0 - b)),
        math.log(rb - r), math.log(rb - half),
    )
    return r * (left + right)


def pressure_potential(rho, params):
    """Pressure potential P with P'(rho) rho - P(rho) = p(rho), P(0) = 0."""
    r = _check_density(rho, params)
    if params.gamma == 2.0:
        return _out(_potential_closed_form(r, params), rho)
    if r.ndim == 0:
        return _potential_quad(float(r), params)
    flat = np.array([_potential_quad(float(v), params) for v in r.ravel()])
    return flat.reshape(r.shape)


def approx_pressure(rho, alpha_cap, gamma_app, params):
    """Regularized pressure defined for all rho >= 0.

    Equal to ``pressure`` below ``rho_bar - alpha_cap``; above it the value is
    frozen at p(rho_bar - alpha_cap) plus ([rho - rho_bar - 1]^+)**gamma_app.
    """
    if not 0 < alpha_cap < params.rho_bar:
        raise DomainError(f"alpha_cap must lie in (0, rho_bar), got {alpha_cap!r}")
    if not gamma_app > 3:
        raise DomainError(f"gamma_app must be > 3, got {gamma_app!r}")
    r = np.asarray(rho, dtype=float)
    if np.any(~(r >= 0)):
        raise DomainError(f"density {r[~(r >= 0)].flat[0] if r.ndim else float(r)!r} < 0")
    cut = params.rho_bar - alpha_cap
    low = r <= cut
    out = np.empty_like(r)
    out[low] = pressure(r[low], params)
    tail = np.maximum(r[~low] - params.rho_bar - 1.0, 0.0) ** gamma_app
    out[~low] = pressure(cut, params) + tail
    return _out(out, rho)

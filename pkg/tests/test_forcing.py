import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochns.errors import ConfigError, DomainError
from stochns.forcing import (ForceSpec, NoiseSpec, deterministic_force, diffusion_coefficient,
                             s_alpha, sample_increments, sample_path, u0_norm)
from stochns.rng import Stream


def test_zero_modes():
    assert sample_increments(0.1, 0, Stream(seed=0)).shape == (0,)


def test_bad_dt():
    with pytest.raises(DomainError):
        sample_increments(0.0, 3, Stream(seed=0))


def test_increment_statistics():
    s = Stream(seed=11)
    draws = np.array([sample_increments(0.01, 2, s) for _ in range(100_000)])
    var = draws.var(axis=0, ddof=1)
    assert np.all((var > 0.0097) & (var < 0.0103))
    assert abs(np.corrcoef(draws.T)[0, 1]) <= 0.01


@pytest.mark.parametrize("kw", [dict(K=-1), dict(f0=-1), dict(q=0.5), dict(alpha=1.0)])
def test_noise_spec_validation(kw):
    with pytest.raises(DomainError):
        NoiseSpec(**kw)


@given(st.integers(0, 200), st.floats(0, 3), st.floats(0.51, 4))
def test_coefficient_tail_bound(K, f0, q):
    spec = NoiseSpec(K=K, f0=f0, q=q)
    from scipy.special import zeta
    total = float(np.sum(spec.coefficients**2))
    assert total <= f0**2 * zeta(2 * q) * (1 + 1e-12) + 1e-300
    assert total + spec.tail() == pytest.approx(f0**2 * zeta(2 * q), rel=1e-9, abs=1e-300)


def test_modes_vanish_on_walls():
    spec = NoiseSpec(K=20, L=2.0)
    ph = spec.modes(np.array([0.0, 2.0]))
    assert np.all(np.abs(ph) < 1e-14)


def test_diffusion_examples():
    spec = NoiseSpec(K=4, f0=1.0, q=1.0, alpha=0.5, L=1.0)
    assert diffusion_coefficient(2, 0.25, 0.5, 1.0, spec) == pytest.approx(0.5 * 2**-0.25, rel=1e-12)
    assert diffusion_coefficient(3, 0.4, 0.5, 0.0, spec) == 0.0
    with pytest.raises(DomainError):
        diffusion_coefficient(5, 0.1, 0.5, 1.0, spec)


def test_growth_bound():
    spec = NoiseSpec(K=6, f0=1.3, q=1.2, alpha=0.7)
    u = np.linspace(-100, 100, 20001)
    x = np.linspace(0, 1, 7)[:, None]
    for k in range(1, 7):
        fk = 1.3 * k**-1.2
        F = diffusion_coefficient(k, x, 0.5, u[None, :], spec)
        assert np.max(np.abs(F) / (fk * (1 + np.abs(u) ** 0.7))) <= 1.0


@given(st.floats(-1e3, 1e3), st.floats(0, 0.999))
def test_s_alpha_growth(u, alpha):
    assert abs(s_alpha(u, alpha)) <= 1 + abs(u) ** alpha


def test_deterministic_force():
    assert deterministic_force(0.3, 0.5, 2.0, ForceSpec()) == 0.0
    assert deterministic_force(0.3, 0.5, 2.0, ForceSpec("constant", 0.3)) == 0.3
    g = deterministic_force(0.3, 0.5, 4.0, ForceSpec("drag", 0.1, alpha=0.5))
    assert g == pytest.approx(-0.1 * 4 * 17**-0.25, rel=1e-12)
    with pytest.raises(ConfigError):
        ForceSpec("gravity", 1.0)


def test_u0_norm():
    assert u0_norm([1, 0, 0]) == 1.0
    assert u0_norm([0, 2, 0]) == 1.0
    assert abs(u0_norm(np.ones(10_000)) - math.pi / math.sqrt(6)) < 1e-4


def test_hilbert_schmidt_partial_sums():
    sums = [sum(u0_norm(np.eye(K)[k]) ** 2 for k in range(K)) for K in range(1, 40)]
    assert all(b > a for a, b in zip(sums, sums[1:]))
    assert sums[-1] < math.pi**2 / 6


def test_wiener_path_reproducible_and_shift():
    a = sample_path(0.01, 3, 50, seed=9)
    b = sample_path(0.01, 3, 50, seed=9)
    assert np.array_equal(a.increments, b.increments)
    W = a.values
    assert np.all(W[:, 0] == 0)
    assert np.array_equal(W[:, 1:], np.cumsum(a.increments, axis=1))
    s = a.shift(20)
    assert np.all(s.values[:, 0] == 0)
    assert np.array_equal(s.increments, a.increments[:, 20:])

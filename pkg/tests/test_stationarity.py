import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import frozen_traj, make_traj
from stochns.errors import ConfigError, DomainError
from stochns.forcing import NoiseSpec
from stochns.solver import FluidState, Grid, StepParams, simulate
from stochns.eos import EosParams
from stochns.stationarity import (Observable, default_dictionary, ergodic_dispersion,
                                  kb_average, kb_convergence, kb_report, mix,
                                  observable_series, shift, stationarity_gap,
                                  write_kb_csv, write_kb_summary)


def periodic_traj(P, periods, N=8, amp=0.2):
    """Density pairing against xi = 1 follows an exact period of P snapshots."""
    n = P * periods + 2
    phase = 2 * np.pi * np.arange(n) / P
    rho = 0.5 + amp * np.sin(phase)[:, None] * np.ones(N)
    return make_traj(rho, np.zeros((n, N + 1)))


def random_traj(rng, n, N=6, K=2):
    rho = rng.uniform(0.05, 0.95, (n, N))
    u = rng.normal(0, 3, (n, N + 1))
    u[:, 0] = u[:, -1] = 0
    tr = make_traj(rho, u, K=K)
    tr.W = np.cumsum(rng.normal(size=(n, K)), axis=0)
    tr.W -= tr.W[0]
    return tr


def sim(seed, T=4.0, N=32):
    g = Grid(N)
    u = 2.0 * np.sin(np.pi * g.nodes)
    u[0] = u[-1] = 0
    st_ = FluidState(0.5 + 0.1 * np.cos(np.pi * g.centers), u)
    return simulate(st_, T, 0.05, EosParams(), StepParams(), NoiseSpec(K=6, f0=1.0), None, seed)


def test_observable_validation():
    with pytest.raises(ConfigError):
        Observable("bounded_vorticity")
    with pytest.raises(DomainError):
        Observable("bounded_energy", window=0)
    with pytest.raises(ConfigError):
        Observable("bounded_density_pairing")
    assert len(default_dictionary(16)) == 9


def test_shift_identity_and_rebase():
    tr = sim(1)
    s0 = shift(tr, 0.0)
    assert np.array_equal(s0.rho, tr.rho) and np.array_equal(s0.W, tr.W)
    s = shift(tr, 1.0)
    assert np.all(s.W[0] == 0) and s.times[0] == 0
    assert np.array_equal(s.W, tr.W[20:] - tr.W[20])
    with pytest.raises(DomainError):
        shift(tr, 0.033)


@given(st.integers(0, 20), st.integers(0, 20))
def test_shift_semigroup(a, b):
    tr = random_traj(np.random.default_rng(a * 31 + b), 45)
    lhs = shift(shift(tr, a * 0.1), b * 0.1)
    rhs = shift(tr, (a + b) * 0.1)
    assert np.array_equal(lhs.rho, rhs.rho)
    assert np.allclose(lhs.W, rhs.W, atol=1e-12)
    assert np.allclose(lhs.times, rhs.times, atol=1e-12)


def test_kb_constant_and_frozen():
    tr = frozen_traj(40)
    for obs in default_dictionary(16):
        v = observable_series(tr, obs)[0]
        for S in (0.1, 1.0, 3.0):
            assert kb_average(tr, obs, S) == pytest.approx(v, rel=1e-15, abs=1e-16)
            assert stationarity_gap(tr, obs, 0.5, S) == 0.0
        assert max(kb_convergence(tr, obs, [0.5, 1.0, 2.0])) <= 1e-15


def test_kb_horizon_error_names_lengths():
    tr = frozen_traj(10)
    obs = Observable("bounded_energy", window=2)
    with pytest.raises(DomainError, match="needs 10 strides.*has 9"):
        kb_average(tr, obs, 0.9)


def test_kb_periodic():
    P, obs = 10, Observable("bounded_density_pairing", np.ones(8), window=1)
    tr = periodic_traj(P, 12)
    v = observable_series(tr, obs)
    one_period = v[:P].mean()
    for n in (1, 3, 7):
        assert abs(kb_average(tr, obs, n * P * 0.1) - one_period) <= 1e-12
    osc = v.max() - v.min()
    for J in (13, 27, 55):
        assert abs(kb_average(tr, obs, J * 0.1) - one_period) <= P / J * osc
    diffs = kb_convergence(tr, obs, [1.3, 2.6, 5.2, 10.4])
    assert all(d <= P / round(S / 0.1) * osc for d, S in zip(diffs, [1.3, 2.6, 5.2]))


@given(st.integers(0, 2**32 - 1), st.integers(0, 15), st.integers(1, 20), st.integers(1, 4),
       st.sampled_from(["bounded_energy", "bounded_density_pairing", "bounded_momentum_pairing"]))
def test_gap_exact_bound(seed, m, J, window, kind):
    rng = np.random.default_rng(seed)
    tr = random_traj(rng, m + J + window + rng.integers(0, 3))
    xi = None if kind == "bounded_energy" else rng.normal(size=6)
    obs = Observable(kind, xi, window, float(rng.uniform(0.1, 3)))
    v = observable_series(tr, obs)
    assert np.all(np.abs(v) <= 1)
    gap = stationarity_gap(tr, obs, m * 0.1, J * 0.1)
    assert gap <= 2 * m / J * np.abs(v).max()
    assert -1 <= kb_average(tr, obs, J * 0.1) <= 1


def test_dispersion():
    trs = [frozen_traj(20), frozen_traj(20)]
    obs = Observable("bounded_energy")
    assert ergodic_dispersion(trs, obs, 1.0) == 0.0
    with pytest.raises(DomainError):
        ergodic_dispersion(trs[:1], obs, 1.0)


@given(st.floats(0, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_convex_mixing(w, a, b):
    v = mix(w, a, b)
    assert min(a, b) - 1e-15 <= v <= max(a, b) + 1e-15
    with pytest.raises(DomainError):
        mix(1.5, a, b)


def test_kb_report_files(tmp_path):
    tr = sim(2, T=2.0, N=16)
    obs = default_dictionary(16)
    rows = kb_report(tr, obs, [0.5, 1.0, 5.0], [0.1, 0.2])
    assert len(rows) == 9 * 2 * 2  # S = 5 does not fit and is skipped
    write_kb_csv(str(tmp_path / "kb.csv"), rows)
    write_kb_summary(str(tmp_path / "kb.json"), obs, rows)
    head = (tmp_path / "kb.csv").read_text().splitlines()[0]
    assert head == "observable_id,S,value,gap_tau,gap_value,seed"
    import json
    js = json.loads((tmp_path / "kb.json").read_text())
    assert len(js["dictionary"]) == 9 and len(js["averages"]) == 18

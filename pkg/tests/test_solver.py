import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochns.errors import DomainError, RetryHalveDt, StiffnessFailure
from stochns.eos import EosParams
from stochns.forcing import ForceSpec, NoiseSpec
from stochns.solver import (FluidState, Grid, StepParams, checkpoint_bytes, mass_fraction_ok,
                            read_checkpoint, simulate, stable_dt, step, total_mass,
                            write_checkpoint)
from stochns.analysis import energy, total_energy
from stochns.trajectory import read_trajectory, same_trajectory, write_trajectory

EOS = EosParams()


def rest(N=128, rho0=0.5):
    return FluidState(np.full(N, rho0), np.zeros(N + 1))


def wavy(N=64, amp=0.1, u_amp=1.0):
    g = Grid(N)
    u = u_amp * np.sin(np.pi * g.nodes)
    u[0] = u[-1] = 0.0
    return FluidState(0.5 + amp * np.cos(np.pi * g.centers), u)


def test_grid_and_state_invariants():
    with pytest.raises(DomainError):
        Grid(3)
    with pytest.raises(DomainError):
        FluidState(np.full(4, 0.5), np.array([0.1, 0, 0, 0, 0]))
    with pytest.raises(DomainError):
        StepParams(mu=0.0)
    assert StepParams(mu=0.02, lam=0.01).nu_eff == pytest.approx(0.03)


def test_stable_dt_rest_state():
    dt = stable_dt(rest(128), StepParams(dt_max=1.0, mu=1e-4), EOS)
    assert dt == pytest.approx(0.5 * (1 / 128) / np.sqrt(48), rel=1e-14)
    dt2 = stable_dt(rest(256), StepParams(dt_max=1.0, mu=1e-4), EOS)
    assert dt2 == pytest.approx(dt / 2, rel=1e-14)


def test_stable_dt_shrinks_near_barrier():
    p = StepParams(dt_max=1.0, mu=1e-4)
    dts = [stable_dt(rest(64, r), p, EOS) for r in (0.5, 0.9, 0.99)]
    assert dts[0] > dts[1] > dts[2]


def test_uniform_rest_is_fixed_point():
    s = rest(32)
    out = step(s, 1e-3, np.zeros(0), StepParams(), EOS)
    assert np.array_equal(out.rho, s.rho) and np.array_equal(out.u, s.u)


def test_guard_rejection():
    s = wavy(32, amp=0.49)
    with pytest.raises(RetryHalveDt):
        # far beyond the CFL bound the upwind update overshoots
        step(FluidState(s.rho, 40 * s.u), 0.05, np.zeros(0), StepParams(), EOS)


def test_mass_conservation_many_steps():
    s = wavy(64)
    p = StepParams()
    noise = NoiseSpec(K=4, f0=1.0)
    rng = np.random.default_rng(0)
    m0 = total_mass(s)
    for _ in range(10_000):
        dt = stable_dt(s, p, EOS)
        s = step(s, dt, rng.normal(0, np.sqrt(dt), 4), p, EOS, noise)
        assert s.u[0] == 0.0 and s.u[-1] == 0.0
    assert abs(total_mass(s) - m0) <= 1e-12 * m0


def test_total_mass_and_fraction():
    assert total_mass(rest(10)) == pytest.approx(0.5)
    assert mass_fraction_ok(rest(10), EOS, 0.1)
    assert not mass_fraction_ok(rest(10, 0.95), EOS, 0.1)


def test_simulate_one_stride():
    tr = simulate(rest(16), 0.1, 0.1, EOS, StepParams())
    assert len(tr) == 2 and tr.times[-1] == 0.1


def test_simulate_rejects_off_grid_horizon():
    with pytest.raises(DomainError):
        simulate(rest(16), 0.25, 0.1, EOS, StepParams())


def test_deterministic_energy_nonincreasing():
    for force in (None, ForceSpec("drag", 0.5, alpha=0.5)):
        tr = simulate(wavy(64), 2.0, 0.01, EOS, StepParams(), force=force)
        E = total_energy(tr)
        steps = np.diff(tr.steps)
        assert np.all(np.diff(E) <= 1e-8 * np.maximum(steps, 1))


def test_bit_identical_reruns_and_resume(tmp_path):
    noise = NoiseSpec(K=8, f0=1.0)
    args = (wavy(48), 1.0, 0.05, EOS, StepParams(), noise, None, 42)
    a = simulate(*args)
    b = simulate(*args)
    assert same_trajectory(a, b)
    ck = tmp_path / "ck.bin"
    simulate(*args[:2], *args[2:], checkpoint_path=str(ck), checkpoint_every=7)
    mid = read_checkpoint(str(ck))
    assert mid.snapshot_index == 14
    c = simulate(args[0], *args[1:], resume=mid)
    assert np.array_equal(c.rho, a.rho[14:]) and np.array_equal(c.W, a.W[14:])
    assert checkpoint_bytes(c.final_checkpoint) == checkpoint_bytes(a.final_checkpoint)


def test_checkpoint_round_trip(tmp_path):
    tr = simulate(wavy(16), 0.2, 0.1, EOS, StepParams(), NoiseSpec(K=3), None, 5)
    p = tmp_path / "c.bin"
    write_checkpoint(str(p), tr.final_checkpoint)
    back = read_checkpoint(str(p))
    assert checkpoint_bytes(back) == checkpoint_bytes(tr.final_checkpoint)
    q = tmp_path / "t.bin"
    write_trajectory(str(q), tr)
    assert same_trajectory(read_trajectory(str(q)), tr)


def test_stiffness_failure_carries_state():
    # no halvings allowed and a brutal initial velocity: the first rejection is fatal
    s = wavy(32, amp=0.45, u_amp=60.0)
    p = StepParams(cfl=1.0, max_halvings=0, dt_max=1.0)
    with pytest.raises(StiffnessFailure) as info:
        simulate(s, 1.0, 0.5, EOS, p)
    assert info.value.state is not None


@settings(max_examples=15)
@given(st.integers(0, 2**64 - 1))
def test_confinement_any_seed(seed):
    noise = NoiseSpec(K=8, f0=2.0)
    tr = simulate(wavy(32, amp=0.3, u_amp=3.0), 1.0, 0.1, EOS, StepParams(), noise, None, seed)
    assert np.all(tr.rho > 0) and np.all(tr.rho < EOS.rho_bar)
    assert np.all(tr.u[:, 0] == 0) and np.all(tr.u[:, -1] == 0)
    m = tr.rho.sum(axis=1) * tr.h
    assert np.max(np.abs(m - m[0])) <= 1e-12 * m[0]


@settings(max_examples=20)
@given(st.floats(0.0, 0.4), st.floats(0.0, 5.0), st.integers(1, 3), st.sampled_from([32, 64]),
       st.booleans())
def test_energy_nonincreasing_every_step(amp, u_amp, mode, N, drag):
    g = Grid(N)
    u = u_amp * np.sin(mode * np.pi * g.nodes)
    u[0] = u[-1] = 0.0
    s = FluidState(0.5 + amp * np.cos(mode * np.pi * g.centers), u)
    p = StepParams()
    force = ForceSpec("drag", 0.5, alpha=0.5) if drag else None
    E = energy(s, EOS, p).total
    for _ in range(300):
        s = step(s, stable_dt(s, p, EOS), np.zeros(0), p, EOS, None, force)
        E1 = energy(s, EOS, p).total
        assert E1 - E <= 1e-8
        E = E1

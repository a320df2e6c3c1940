import numpy as np
import pytest
from hypothesis import settings

from stochns.eos import EosParams
from stochns.trajectory import Trajectory

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

REF = EosParams(a=1.0, gamma=2.0, beta=4.0, rho_bar=1.0)


def make_traj(rho, u, stride=0.1, K=0, seed=0, eos=REF, nu=0.01, L=1.0):
    """Trajectory from stacked snapshot arrays, zero noise and integrals."""
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    n = rho.shape[0]
    z = np.zeros(n)
    return Trajectory(
        times=stride * np.arange(n), rho=rho, u=u, W=np.zeros((n, K)),
        dissipation=z.copy(), force_work=z.copy(), ito_correction=z.copy(),
        martingale=z.copy(), steps=np.arange(n, dtype=np.int64), L=L, stride=stride,
        eos=eos, nu=nu, seed=seed,
    )


def frozen_traj(n_snap=50, N=16, rho0=0.5, stride=0.1):
    return make_traj(np.full((n_snap, N), rho0), np.zeros((n_snap, N + 1)), stride)


@pytest.fixture
def ref_eos():
    return REF


# acceptance criteria report one line each; printed in the terminal summary
ACCEPTANCE = {}


def record(k, passed, detail):
    ACCEPTANCE[k] = f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE[k])
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

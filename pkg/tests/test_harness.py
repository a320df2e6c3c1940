import json

import numpy as np
import pytest

from stochns.config import parse
from stochns.harness import run_ensemble, run_trajectory, split_seed, tree_digest
from stochns.solver import simulate
from stochns.trajectory import same_trajectory

CFG = """
[grid]
N = 32
[noise]
K = 4
f0 = 1.0
seed = 5
[init]
kind = "perturbed"
amp = 0.1
u_amp = 1.0
[run]
T = 1.0
stride = 0.1
ensemble = 3
S = [0.5]
tau = [0.1]
"""


def test_split_seed_reexport():
    assert split_seed(0, 0) == 0xE220A8397B1DCDAF


def test_ensemble_of_one_is_simulate():
    cfg = parse(CFG.replace("ensemble = 3", "ensemble = 1"))
    res = run_ensemble(cfg)
    direct = simulate(cfg.initial_state(), 1.0, 0.1, cfg.eos, cfg.step, cfg.noise, cfg.force,
                      split_seed(5, 0), config_hash=cfg.hash())
    assert same_trajectory(res.trajectories[0], direct)


def test_worker_count_invariance(tmp_path):
    cfg = parse(CFG)
    run_ensemble(cfg, 1, str(tmp_path / "a"))
    run_ensemble(cfg, 3, str(tmp_path / "b"))
    assert tree_digest(str(tmp_path / "a")) == tree_digest(str(tmp_path / "b"))
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["config.toml", "kb.csv", "kb_summary.json", "manifest.json", "moments_m1.csv",
                     "moments_m2.csv", "residuals.csv", "traj_0000", "traj_0001", "traj_0002"]


def test_failure_isolated(tmp_path):
    # every member fails: violent start, no retries allowed
    cfg = parse(CFG.replace("u_amp = 1.0", "u_amp = 60.0\namp = 0.45").replace("amp = 0.1\n", "")
                + "[step]\nmax_halvings = 0\ncfl = 1.0\ndt_max = 1.0\n")
    res = run_ensemble(cfg, 1, str(tmp_path / "f"))
    man = json.loads((tmp_path / "f" / "manifest.json").read_text())
    assert man["failed"] == 3 and man["trajectories"][0]["status"] == "stiff"
    assert man["trajectories"][0]["last_state"]["rho_max"] < 1.0
    assert (tmp_path / "f" / "traj_0000" / "failure_state.bin").exists()


def test_partial_failure_keeps_others(monkeypatch):
    import stochns.harness as H
    real = H.simulate

    def flaky(*a, **kw):
        if a[7] == split_seed(5, 1):
            from stochns.errors import StiffnessFailure
            raise StiffnessFailure("synthetic", a[0])
        return real(*a, **kw)

    monkeypatch.setattr(H, "simulate", flaky)
    res = run_ensemble(parse(CFG))
    assert [o.status for o in res.outcomes] == ["ok", "stiff", "ok"]
    assert res.manifest["completed"] == 2 and res.moments[1].size == 2

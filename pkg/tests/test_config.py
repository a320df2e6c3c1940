import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochns.config import RunConfig, fnv1a64, load, parse, serialize, validate
from stochns.errors import ConfigError

SAMPLE = """
[grid]
N = 32
L = 2
[eos]
gamma = 1.5
[noise]
K = 4
seed = 99
[force]
kind = "drag"
value = 0.2
[init]
kind = "perturbed"
amp = 0.05
mode = 2
[run]
T = 1
stride = 0.25
S = [0.5]
"""


def test_fnv1a_reference():
    # published FNV-1a 64 test vectors
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_parse_and_round_trip():
    cfg = parse(SAMPLE)
    assert cfg.grid.N == 32 and cfg.noise.L == 2.0 and cfg.force.alpha == cfg.noise.alpha
    assert cfg.step.mu == 0.01 and cfg.master_seed == 99
    assert parse(serialize(cfg)) == cfg
    assert serialize(parse(serialize(cfg))) == serialize(cfg)


def test_int_and_float_spellings_hash_equal():
    a = parse("[grid]\nL = 1\n")
    b = parse("[grid]\nL = 1.0\n")
    assert a.hash() == b.hash()


def test_hash_ignores_output_dir():
    cfg = parse(SAMPLE)
    assert cfg.with_out("elsewhere").hash() == cfg.hash()
    assert cfg.with_seed(1).hash() != cfg.hash()


@pytest.mark.parametrize("text,msg", [
    ("[grid]\nN = 2\n", "N >= 4"),
    ("[grid]\nbogus = 1\n", "unknown key"),
    ("[nope]\n", "unknown section"),
    ("[init]\nkind = 'rest'\nrho0 = 0.9995\n", "rho_bar - delta"),
    ("[init]\nkind = 'magic'\n", "init kind"),
    ("[run]\nT = 1.05\nstride = 0.1\n", "multiple"),
    ("[force]\nkind = 'gravity'\n", "force kind"),
    ("[step]\nmu = 'x'\n", "number"),
    ("[grid\n", "TOML"),
])
def test_validation_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse(text)


def test_load_names_file(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[grid]\nN = 1\n")
    with pytest.raises(ConfigError, match="c.toml"):
        load(str(p))


@given(st.integers(4, 512), st.floats(0.1, 10), st.floats(0.05, 0.9), st.integers(0, 2**63 - 1),
       st.floats(0.001, 1.0), st.lists(st.integers(1, 4), max_size=3))
def test_round_trip_property(N, L, rho0, seed, mu, moments):
    text = (f"[grid]\nN = {N}\nL = {L!r}\n[noise]\nseed = {seed}\n[step]\nmu = {mu!r}\n"
            f"[init]\nrho0 = {rho0!r}\n[run]\nmoments = {moments}\n")
    cfg = parse(text)
    assert parse(serialize(cfg)) == cfg


def test_initial_states():
    cfg = parse(SAMPLE)
    st_ = cfg.initial_state()
    assert st_.rho.mean() == pytest.approx(0.5, abs=1e-15)
    assert st_.u[0] == 0 and st_.u[-1] == 0
    assert validate(RunConfig()) == RunConfig()

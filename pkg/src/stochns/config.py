"""Run configuration: TOML in, canonical text out, FNV-1a hash.

Sections and keys (all optional, defaults in the dataclasses below)::

    [grid]  N, L
    [eos]   a, gamma, beta, rho_bar
    [noise] K, f0, q, alpha, seed      # seed is the ensemble master seed
    [force] kind, value
    [step]  mu, lam, cfl, guard, dt_max, max_halvings
    [init]  kind, rho0, amp, mode, u_amp, u_mode, path, delta
    [run]   T, stride, ensemble, out, eps, moments, S, tau

The canonical form lists sections in that order and keys alphabetically,
one ``key = value`` per line, floats in shortest round-trip repr.  The
config hash is the 64-bit FNV-1a of its UTF-8 bytes with ``run.out``
left out, printed as 16 hex digits.
"""
from dataclasses import dataclass, field, fields, replace
import json
import math

import numpy as np
import tomli

from .eos import EosParams
from .errors import ConfigError, DomainError
from .forcing import ForceSpec, NoiseSpec
from .solver import FluidState, Grid, StepParams, read_checkpoint

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data):
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class InitSpec:
    """Initial data.

    rest:      rho = rho0, u = 0
    perturbed: rho = rho0 + amp cos(mode pi x / L) at cell centres,
               u = u_amp sin(u_mode pi x / L) at nodes
    file:      state read from a checkpoint at ``path``
    """

    kind: str = "rest"
    rho0: float = 0.5
    amp: float = 0.0
    mode: int = 1
    u_amp: float = 0.0
    u_mode: int = 1
    path: str = ""
    delta: float = 1e-3

    KINDS = ("rest", "perturbed", "file")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown init kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "file" and not self.path:
            raise ConfigError("init.kind = 'file' needs init.path")
        if self.mode < 1 or self.u_mode < 1:
            raise ConfigError("init.mode and init.u_mode must be >= 1")
        if not self.delta > 0:
            raise ConfigError(f"init.delta must be > 0, got {self.delta}")


@dataclass(frozen=True)
class RunSpec:
    T: float = 10.0
    stride: float = 0.1
    ensemble: int = 1
    out: str = "out"
    eps: float = 0.01
    moments: tuple = (1, 2)
    S: tuple = ()
    tau: tuple = ()

    def __post_init__(self):
        if not self.T > 0 or not self.stride > 0:
            raise ConfigError(f"run.T and run.stride must be > 0, got {self.T}, {self.stride}")
        J = round(self.T / self.stride)
        if J < 1 or abs(J * self.stride - self.T) > 1e-9 * self.T:
            raise ConfigError(f"run.T = {self.T} is not a multiple of run.stride = {self.stride}")
        if self.ensemble < 1:
            raise ConfigError(f"run.ensemble must be >= 1, got {self.ensemble}")
        object.__setattr__(self, "moments", tuple(int(m) for m in self.moments))
        object.__setattr__(self, "S", tuple(float(s) for s in self.S))
        object.__setattr__(self, "tau", tuple(float(s) for s in self.tau))
        if any(m < 1 for m in self.moments):
            raise ConfigError("run.moments must be positive integers")


@dataclass(frozen=True)
class RunConfig:
    grid: Grid = field(default_factory=Grid)
    eos: EosParams = field(default_factory=EosParams)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    force: ForceSpec = field(default_factory=ForceSpec)
    step: StepParams = field(default_factory=StepParams)
    init: InitSpec = field(default_factory=InitSpec)
    run: RunSpec = field(default_factory=RunSpec)

    @property
    def master_seed(self):
        return self.noise.seed

    def with_seed(self, seed):
        return replace(self, noise=replace(self.noise, seed=int(seed)))

    def with_out(self, out):
        return replace(self, run=replace(self.run, out=str(out)))

    def hash(self):
        # where results go does not change what they are
        return f"{fnv1a64(serialize(self, include_out=False).encode()):016x}"

    def initial_state(self):
        g = self.grid
        if self.init.kind == "file":
            st = read_checkpoint(self.init.path).state
            if st.rho.size != g.N or st.L != g.L:
                raise ConfigError(f"{self.init.path}: state grid differs from [grid]")
            return FluidState(st.rho.copy(), st.u.copy(), 0.0, g.L)
        rho = np.full(g.N, float(self.init.rho0))
        u = np.zeros(g.N + 1)
        if self.init.kind == "perturbed":
            rho = rho + self.init.amp * np.cos(self.init.mode * np.pi * g.centers / g.L)
            u = self.init.u_amp * np.sin(self.init.u_mode * np.pi * g.nodes / g.L)
            u[0] = u[-1] = 0.0
        return FluidState(rho, u, 0.0, g.L)


SECTIONS = {
    "grid": Grid, "eos": EosParams, "noise": NoiseSpec, "force": ForceSpec,
    "step": StepParams, "init": InitSpec, "run": RunSpec,
}
# derived or shared values that are not config keys
_HIDDEN = {"eos": {"p_bar"}, "noise": {"L"}, "force": {"alpha"}}


def _keys(section):
    cls = SECTIONS[section]
    return [f.name for f in fields(cls) if f.init and f.name not in _HIDDEN.get(section, ())]


def _coerce(key, v, typ, section):
    # ints written for float keys hash the same as their float spelling
    if typ is float or typ == (float | None):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"[{section}] {key} must be a number, got {v!r}")
        return float(v)
    if typ is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"[{section}] {key} must be an integer, got {v!r}")
        return v
    if typ is str and not isinstance(v, str):
        raise ConfigError(f"[{section}] {key} must be a string, got {v!r}")
    return v


def _build(section, values, **extra):
    allowed = set(_keys(section))
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    types = {f.name: f.type for f in fields(SECTIONS[section])}
    values = {k: _coerce(k, v, types[k], section) for k, v in values.items()}
    try:
        return SECTIONS[section](**values, **extra)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def from_dict(data):
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    for k in SECTIONS:
        if not isinstance(data.get(k, {}), dict):
            raise ConfigError(f"[{k}] must be a table")
    sec = {k: dict(data.get(k, {})) for k in SECTIONS}
    grid = _build("grid", sec["grid"])
    noise = _build("noise", sec["noise"], L=grid.L)
    if not 0 <= noise.seed < 2**64:
        raise ConfigError(f"noise.seed must be a 64-bit unsigned integer, got {noise.seed}")
    force = _build("force", sec["force"], alpha=noise.alpha)
    cfg = RunConfig(
        grid=grid, eos=_build("eos", sec["eos"]), noise=noise, force=force,
        step=_build("step", sec["step"]), init=_build("init", sec["init"]),
        run=_build("run", sec["run"]),
    )
    validate(cfg)
    return cfg


def parse(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return from_dict(data)


def load(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return parse(raw.decode("utf-8"))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ConfigError(f"non-finite value {v!r} cannot be serialized")
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {v!r}")


def serialize(cfg, include_out=True):
    lines = []
    for section in SECTIONS:
        obj = getattr(cfg, section)
        lines.append(f"[{section}]")
        for key in sorted(_keys(section)):
            v = getattr(obj, key)
            if v is None or (section == "run" and key == "out" and not include_out):
                continue
            lines.append(f"{key} = {_value(v)}")
        lines.append("")
    return "\n".join(lines)


def validate(cfg):
    """Cross-section checks; returns the config unchanged."""
    if cfg.noise.L != cfg.grid.L:
        raise ConfigError("noise modes and grid disagree on L")
    if cfg.init.kind != "file":
        st = cfg.initial_state()
        guard = cfg.step.guard_band(cfg.eos)
        mean = float(np.mean(st.rho))
        if mean > cfg.eos.rho_bar - cfg.init.delta:
            raise ConfigError(
                f"mean initial density {mean!r} exceeds rho_bar - delta = "
                f"{cfg.eos.rho_bar - cfg.init.delta!r}"
            )
        try:
            st.validate(cfg.eos, guard)
        except DomainError as exc:
            raise ConfigError(f"[init]: {exc}") from exc
    return cfg


def as_dict(cfg):
    return {s: {k: getattr(getattr(cfg, s), k) for k in _keys(s)} for s in SECTIONS}

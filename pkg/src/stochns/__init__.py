"""Stochastic compressible Navier-Stokes laboratory with hard-sphere pressure (1D)."""
__version__ = "0.1.0"

from .eos import EosParams, pressure, pressure_derivative, pressure_potential, sound_speed
from .errors import (ConfigError, DomainError, NonFiniteError, NumericError,
                     QuadratureError, RetryHalveDt, StiffnessFailure)
from .forcing import ForceSpec, NoiseSpec
from .rng import Stream, split_seed
from .solver import FluidState, Grid, StepParams, simulate, stable_dt, step, total_mass
from .trajectory import Trajectory

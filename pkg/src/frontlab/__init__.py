"""Numerical laboratory for travelling fronts of the damped bistable wave equation

    alpha u_tt + u_t = u_xx - V'(u).

Modules: ``potential`` (bistable potentials and their constants), ``grid``
(states, quadrature, uniformly local norms), ``front`` (travelling-front
shooting), ``evolve`` (explicit time stepping and the v + r splitting),
``energy`` (weighted frame energies), ``spectrum`` (linearised operator and
decay rates), ``config``/``runner``/``cli`` (experiments and I/O).
"""

from ._backend import BACKEND
from .config import ConfigError, RunConfig, load_config
from .energy import energy_balance, frame, frame_energy, poincare_check
from .evolve import EvolveParams, SplitStepper, Stepper, invasion_point, split_initial
from .front import FrontProfile, analytic_cubic_front, hyperbolic_front_state, solve_front
from .grid import Grid1D, WaveState
from .potential import BistablePotential, make_cubic, supersonic_example, validate
from .spectrum import decay_rate_experiment, spectral_report

__all__ = [
    "BACKEND",
    "BistablePotential",
    "ConfigError",
    "EvolveParams",
    "FrontProfile",
    "Grid1D",
    "RunConfig",
    "SplitStepper",
    "Stepper",
    "WaveState",
    "analytic_cubic_front",
    "decay_rate_experiment",
    "energy_balance",
    "frame",
    "frame_energy",
    "hyperbolic_front_state",
    "invasion_point",
    "load_config",
    "make_cubic",
    "poincare_check",
    "solve_front",
    "spectral_report",
    "split_initial",
    "supersonic_example",
    "validate",
]

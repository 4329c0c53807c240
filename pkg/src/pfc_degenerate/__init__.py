"""Regularized phase-field-crystal dynamics with degenerate mobility on the periodic box.

Pseudo-spectral Galerkin discretisation of

    u_t = div(M_theta(u) grad omega),   omega = W'(u) + kappa (u + 2 lap u + lap^2 u),

with M_theta(z) = max(z, theta), plus diagnostics (mass, energy, entropy,
negativity) and a theta -> 0 continuation driver.
"""

from .config import ConfigError, RunConfig, load_config, parse_config
from .diagnostics import DiagnosticsRecord, GrowthReport, growth_check
from .physics import MobilityModel, PotentialSpec, chemical_potential, free_energy
from .solver import (CheckpointError, InitialCondition, SchemeConfig, SolverState,
                     StepSizeUnderflow, checkpoint_load, checkpoint_save, run, step)
from .spectral import Grid, SpectralField, make_grid
from .sweep import Scenario, SweepPlan, sweep

__version__ = "0.1.0"

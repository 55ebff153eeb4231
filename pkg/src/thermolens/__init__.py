"""Coupled Westervelt-Pennes simulator for thermal lensing, with verification tools."""

__version__ = "0.1.0"

from .absorption import AbsorptionHistory, AbsorptionModel, absorbed_energy, lipschitz_probe
from .config import load_config, parse_config, render_config
from .coupled import (
    AcousticSource,
    Profile,
    SimConfig,
    SimulationResult,
    ball_diagnostics,
    check_nondegeneracy,
    picard_step,
    run_simulation,
)
from .energy import (
    EnergyReport,
    acoustic_energies,
    gronwall_certificate,
    gronwall_check,
    heat_energy,
    lambda_F,
)
from .errors import (
    ConfigError,
    DegeneracyError,
    InvalidParameterError,
    LinearSolveError,
    NonConvergenceError,
    SolverError,
    ThermolensError,
)
from .grid import Grid
from .linear import AcousticState, FrozenCoefficients, ThermalState, heat_step, pressure_step
from .manufactured import ManufacturedSolution, TimeEnvelope, mms_forcing
from .materials import MediumParams, SoundSpeedLaw, k_of_theta, q_of_theta, validate_assumptions

__all__ = [name for name in dir() if not name.startswith("_")]

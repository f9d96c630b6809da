"""phRPA correlation energies of one-dimensional soft-Coulomb models.

The package builds finite-difference one-body Hamiltonians, the
noninteracting density response in two independent forms, the phRPA
trace-log correlation energy with its three-term splitting for stretched H2,
and an exact two-electron reference.  ``phrpa.cli`` wraps it for batch runs.
"""

from .errors import ConfigError, ConvergenceError, GapClosedError, KernelError, NumericalError, PhRPAError
from .grid import Grid, PotentialSpec, build_grid, solve_eigensystem
from .energy import Model, correlation_energy, dissociation_curve, h2_system, total_energy_h, total_energy_h2
from .splitting import split_correlation
from .twoelectron import ground_state, nbody_dissociation_report

__version__ = "0.1.0"

__all__ = [
    "PhRPAError", "ConfigError", "NumericalError", "GapClosedError", "KernelError", "ConvergenceError",
    "Grid", "PotentialSpec", "build_grid", "solve_eigensystem",
    "Model", "correlation_energy", "dissociation_curve", "h2_system", "total_energy_h", "total_energy_h2",
    "split_correlation", "ground_state", "nbody_dissociation_report",
]

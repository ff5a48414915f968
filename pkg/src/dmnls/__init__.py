"""Dispersion-managed NLS with lumped amplification.

Pseudospectral solvers for the rapidly varying equation, its transformed form
and the averaged equation, plus the checks that tie them together.
"""

from .config import RunConfig
from .fiber import FiberParams, gain_G, integral_G, integral_d, psi
from .grid import ComplexField, SpatialGrid, Trajectory, gaussian_profile, h1_norm, l2_norm
from .harness import lipschitz_probe, perturbed_sweep, sweep_epsilon
from .nonlinearities import Q_avg, Q_eps, gauss_legendre, kernel_identity_check
from .propagators import free_T, linear_U
from .solvers import SolveConfig, energy, solve_averaged, solve_full, solve_transformed

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "FiberParams",
    "Q_avg",
    "Q_eps",
    "RunConfig",
    "SolveConfig",
    "SpatialGrid",
    "Trajectory",
    "energy",
    "free_T",
    "gain_G",
    "gauss_legendre",
    "gaussian_profile",
    "h1_norm",
    "integral_G",
    "integral_d",
    "kernel_identity_check",
    "l2_norm",
    "linear_U",
    "lipschitz_probe",
    "perturbed_sweep",
    "psi",
    "solve_averaged",
    "solve_full",
    "solve_transformed",
    "sweep_epsilon",
]

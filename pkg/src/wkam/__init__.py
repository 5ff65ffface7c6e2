"""Numerical weak KAM toolkit for mechanical Lagrangians on tori.

The subpackages compute Mather's alpha and beta functions by linear
programming over closed occupation measures, weak KAM solutions by
Lax-Oleinik iteration, Mañé potentials by shortest paths, and convexity
diagnostics that tie these together.  The pendulum has a closed-form oracle
used for verification.
"""
from .dynamics import FourierPotential, PhasePoint, SystemSpec, Trajectory, integrate_flow
from .pendulum import PendulumOracle, OracleSpec
from .measure_lp import MeasureGrid, solve_alpha, solve_beta, scan_alpha, scan_beta
from .lax_oleinik import SemigroupConfig, weak_kam_fixed_point, conjugate_solution
from .mane import ManeParams, mane_potential_matrix, projected_aubry_estimate
from .config import RunConfig, load_config
from .pipeline import run_command

__version__ = "0.1.0"

__all__ = [
    "FourierPotential",
    "PhasePoint",
    "SystemSpec",
    "Trajectory",
    "integrate_flow",
    "PendulumOracle",
    "OracleSpec",
    "MeasureGrid",
    "solve_alpha",
    "solve_beta",
    "scan_alpha",
    "scan_beta",
    "SemigroupConfig",
    "weak_kam_fixed_point",
    "conjugate_solution",
    "ManeParams",
    "mane_potential_matrix",
    "projected_aubry_estimate",
    "RunConfig",
    "load_config",
    "run_command",
]

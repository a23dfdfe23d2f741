"""Krylov-complexity analysis of kicked quantum rotors.

The canonical rotor (``V = K cos x``) and the singular rotor
(``V = K |x|^alpha``) are evolved in a truncated momentum basis; the
evolving state is then expanded in the Krylov basis built by Arnoldi
iteration of the Floquet operator.
"""
from .analysis import (
    PRESETS,
    FitResult,
    InitialStates,
    RegimePreset,
    SweepResult,
    break_time,
    fit_exponential,
    fit_powerlaw,
    haar_random_state,
    mean_kcomplexity,
    point_observables,
    scaling_fit,
    sweep,
)
from .floquet import FloquetOperator, RotorParams, apply, evolve, floquet_operator, make_grid
from .krylov import arnoldi, complexity_series, k_complexity, k_ipr, project, subdiag, variance_arnoldi
from .lattice import MomentumGrid, QuantumState, delta_state, ipr
from .spectral import averaged_eigenstate_profile, diagonalize, spacing_stats

__version__ = "0.1.0"

__all__ = [
    "PRESETS", "FitResult", "InitialStates", "RegimePreset", "SweepResult", "break_time",
    "fit_exponential", "fit_powerlaw", "haar_random_state", "mean_kcomplexity",
    "point_observables", "scaling_fit", "sweep", "FloquetOperator", "RotorParams", "apply",
    "evolve", "floquet_operator", "make_grid", "arnoldi", "complexity_series", "k_complexity",
    "k_ipr", "project", "subdiag", "variance_arnoldi", "MomentumGrid", "QuantumState",
    "delta_state", "ipr", "averaged_eigenstate_profile", "diagonalize", "spacing_stats",
]

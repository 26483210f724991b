"""Shifted-l expansion for Klein-Gordon and Dirac bound states."""

from .engine import (
    CoefficientSet,
    EnergyBreakdown,
    ExpansionPoint,
    StateSpec,
    coefficient_ladder,
    energy_series,
    solve_expansion_point,
    solve_state,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    FitError,
    NoBoundStateError,
    SletError,
)
from .potentials import PotentialKind, PotentialSpec, RadialSeries
from .spectra import MassRule, ParticleSystem, SpectrumRow, run_table

__all__ = [
    "CoefficientSet",
    "ConfigurationError",
    "ConvergenceError",
    "DomainError",
    "EnergyBreakdown",
    "ExpansionPoint",
    "FitError",
    "MassRule",
    "NoBoundStateError",
    "ParticleSystem",
    "PotentialKind",
    "PotentialSpec",
    "RadialSeries",
    "SletError",
    "SpectrumRow",
    "StateSpec",
    "coefficient_ladder",
    "energy_series",
    "run_table",
    "solve_expansion_point",
    "solve_state",
]

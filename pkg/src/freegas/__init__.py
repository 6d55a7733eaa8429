"""Equilibration of non-interacting Bose and Fermi gases.

The N-particle problem for counting observables reduces exactly to
single-particle dynamics; this package implements that reduction, the
box-release and trap-quench examples, general equilibration-time bounds,
Gaussian (covariance-matrix) lattice dynamics, and a brute-force Fock-space
oracle used to validate everything on small instances.
"""

__version__ = "0.1.0"

from .spectral import (
    SpectralSystem,
    StateSP,
    ProjectorObservable,
    GapStructure,
    evolve,
    expectation_P,
    time_average_state,
    distinguishability,
    gap_structure,
    density_of_states,
)
from .series import TimeSeries
from .reduction import ModeEnsemble, CorrelationMatrix, reduce_to_single_particle, delta_M

__all__ = [
    "SpectralSystem",
    "StateSP",
    "ProjectorObservable",
    "GapStructure",
    "TimeSeries",
    "ModeEnsemble",
    "CorrelationMatrix",
    "evolve",
    "expectation_P",
    "time_average_state",
    "distinguishability",
    "gap_structure",
    "density_of_states",
    "reduce_to_single_particle",
    "delta_M",
    "__version__",
]

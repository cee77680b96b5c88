"""Quantum Zeno dynamics on a grid: repeated projective measurements of a
spatial region and their convergence to hard-wall evolution."""

__version__ = "0.1.0"

from .errors import (BoxTooSmallError, CapacityError, ConfigError, DegenerateStateError, DomainError, FitError,
                     StructuralError, TruncationError, UndersamplingError, ZenoError)
from .projection import Interval, Rectangle2D, UnionOfIntervals, padded_grid, project
from .propagator import HarmonicPotential, LinearPotential, PropagatorSpec, TabulatedPotential, ZeroPotential, evolve
from .state import Axis, Grid, WaveFunction, gaussian_packet, inner, normalize, sine_mode
from .zeno import GaussianState, SineState, ZenoRunConfig, zeno_matrix, zeno_run, zeno_step

__all__ = [
    "__version__", "Axis", "Grid", "WaveFunction", "Interval", "Rectangle2D", "UnionOfIntervals", "PropagatorSpec",
    "ZeroPotential", "LinearPotential", "HarmonicPotential", "TabulatedPotential", "SineState", "GaussianState",
    "ZenoRunConfig", "zeno_run", "zeno_step", "zeno_matrix", "evolve", "project", "padded_grid", "inner",
    "normalize", "sine_mode", "gaussian_packet", "ZenoError", "StructuralError", "DomainError",
    "DegenerateStateError", "CapacityError", "BoxTooSmallError", "TruncationError", "UndersamplingError", "FitError",
    "ConfigError",
]

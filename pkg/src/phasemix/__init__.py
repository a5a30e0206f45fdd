"""Finite-difference solver for a phase-field model of an incompressible
binary mixture with a velocity-dependent chemical potential."""

from .errors import (
    BlowUp,
    CFLViolation,
    ConfigError,
    FormatError,
    IncompatibleRHS,
    IoError,
    NonConvergence,
    ParseError,
    PhasemixError,
    SolverError,
    ValidationError,
)
from .grid import Grid, VectorField
from .linsolve import SolverConfig
from .model import SimParams
from .stepper import State, advance, new_state, run

__all__ = [
    "BlowUp",
    "CFLViolation",
    "ConfigError",
    "FormatError",
    "Grid",
    "IncompatibleRHS",
    "IoError",
    "NonConvergence",
    "ParseError",
    "PhasemixError",
    "SimParams",
    "SolverConfig",
    "SolverError",
    "State",
    "ValidationError",
    "VectorField",
    "advance",
    "new_state",
    "run",
]

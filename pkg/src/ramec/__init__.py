"""Rotatable-antenna mobile edge computing: pointing and offloading optimization."""

__version__ = "0.1.0"

from .errors import DegenerateGeometry, InfeasibleProblem, InvalidArgument
from .geometry import ChannelParams, build_array, build_channels
from .resource import SolverSettings, TaskParams, solve_resource_allocation, validate_allocation
from .saho import AOSettings, Solution, SolveMode, objective_of, solve, solve_dynamic, solve_fixed, solve_static
from .scenario import Scenario, make_scenario

__all__ = [
    "AOSettings",
    "ChannelParams",
    "DegenerateGeometry",
    "InfeasibleProblem",
    "InvalidArgument",
    "Scenario",
    "Solution",
    "SolveMode",
    "SolverSettings",
    "TaskParams",
    "build_array",
    "build_channels",
    "make_scenario",
    "objective_of",
    "solve",
    "solve_dynamic",
    "solve_fixed",
    "solve_resource_allocation",
    "solve_static",
    "validate_allocation",
]

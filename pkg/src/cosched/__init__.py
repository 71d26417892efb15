"""Dynamic constellation observation scheduling toolkit."""

from .intervals import TimeInterval
from .problem import (
    ChangeEvent,
    Downlink,
    DynamicProblem,
    Request,
    Snapshot,
    Task,
    check_constraints,
    dynamic_utility,
    static_utility,
)
from .solvers import SOLVER_NAMES, SolverConfig
from .sim import run

__all__ = [
    "TimeInterval",
    "ChangeEvent",
    "Downlink",
    "DynamicProblem",
    "Request",
    "Snapshot",
    "Task",
    "check_constraints",
    "dynamic_utility",
    "static_utility",
    "SOLVER_NAMES",
    "SolverConfig",
    "run",
]

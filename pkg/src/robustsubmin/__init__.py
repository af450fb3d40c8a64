"""Robust submodular minimization: minimise the worst of several monotone submodular functions over a combinatorial family."""

from .core import (
    ConcaveOverModular,
    GroundSet,
    ModularFunction,
    RobustObjective,
    ScaledSum,
    SetFunction,
    SqrtModular,
    average,
    curvature,
    lovasz,
    modular_lower_bound,
    modular_upper_bound,
)
from .oracle import BudgetExceeded, EnumerationBudget, brute_force_min, enumerate_feasible
from .solvers import (
    ALGORITHMS,
    CROptions,
    RobustInstance,
    SolveReport,
    SolverError,
    cr,
    ea,
    mmin,
    round_chain,
    solve_aa,
    solve_all,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BudgetExceeded",
    "CROptions",
    "ConcaveOverModular",
    "EnumerationBudget",
    "GroundSet",
    "ModularFunction",
    "RobustInstance",
    "RobustObjective",
    "ScaledSum",
    "SetFunction",
    "SolveReport",
    "SolverError",
    "SqrtModular",
    "average",
    "brute_force_min",
    "cr",
    "curvature",
    "ea",
    "enumerate_feasible",
    "lovasz",
    "mmin",
    "modular_lower_bound",
    "modular_upper_bound",
    "round_chain",
    "solve_aa",
    "solve_all",
]

"""Exact solver for restricted inverse optimal value problems on network LPs.

Given a feasible solution and a target objective value, the solver computes
a minimally perturbed cost vector (weighted l1 distance, exact rational
arithmetic) that makes the solution optimal with exactly the target value.
Transportation, shortest-path and general node-arc instances are supported;
every sub-problem reduces to a bounded minimum-cost flow.
"""

from .inverse import (
    BreakPoints,
    InfeasibleInverse,
    InverseSolution,
    big_delta,
    delta,
    lbp,
    rbp,
    recover_cost,
    slope_at,
    solve,
)
from .numeric import Rational, format_rational, parse_rational
from .subproblem import (
    GeneralNetwork,
    Hitchcock,
    InstanceError,
    InverseInstance,
    PsiPoint,
    ShortestPath,
    eval_psi,
    general_instance,
    hitchcock_instance,
    is_turning_coordinate,
    shortest_path_instance,
)

__version__ = "0.1.0"

__all__ = [
    "BreakPoints",
    "GeneralNetwork",
    "Hitchcock",
    "InfeasibleInverse",
    "InstanceError",
    "InverseInstance",
    "InverseSolution",
    "PsiPoint",
    "Rational",
    "ShortestPath",
    "big_delta",
    "delta",
    "eval_psi",
    "format_rational",
    "general_instance",
    "hitchcock_instance",
    "is_turning_coordinate",
    "lbp",
    "parse_rational",
    "rbp",
    "recover_cost",
    "shortest_path_instance",
    "slope_at",
    "solve",
]

"""Equilibrium stopping policies for one-dimensional diffusions under
alpha-maxmin model ambiguity."""

from .model import (Component, ComponentDecomposition, GridPolicy, Objective,
                    PriorFamily, StateGrid, StateInterval, build_grid,
                    decompose_complement)
from .analytic import (ExponentPair, PutGbmProblem, a_star, classify_policy,
                       crossing_point, discounted_hitting_factor, exponents,
                       lambda_value, optimal_equilibrium, value_of_equilibrium)
from .value import (ExitSolution, ExitValueProblem, ValueProfile,
                    alpha_maxmin_value, solve_exit_value, split_regions)
from .fixedpoint import (ComparisonResult, ConvergenceError, EquilibriumCheck,
                         EquilibriumSolver, IterationTrace, compare_equilibria,
                         is_equilibrium, iterate_to_equilibrium, policy_values,
                         theta)
from .mc import (CapacityTable, HittingEstimate, MaxminEstimate, SimConfig,
                 capacity_diagnostic, empirical_maxmin, estimate_hitting_value)

__version__ = "0.1.0"

__all__ = [
    "Component", "ComponentDecomposition", "GridPolicy", "Objective",
    "PriorFamily", "StateGrid", "StateInterval", "build_grid",
    "decompose_complement",
    "ExponentPair", "PutGbmProblem", "a_star", "classify_policy",
    "crossing_point", "discounted_hitting_factor", "exponents", "lambda_value",
    "optimal_equilibrium", "value_of_equilibrium",
    "ExitSolution", "ExitValueProblem", "ValueProfile", "alpha_maxmin_value",
    "solve_exit_value", "split_regions",
    "ComparisonResult", "ConvergenceError", "EquilibriumCheck",
    "EquilibriumSolver", "IterationTrace", "compare_equilibria",
    "is_equilibrium", "iterate_to_equilibrium", "policy_values", "theta",
    "CapacityTable", "HittingEstimate", "MaxminEstimate", "SimConfig",
    "capacity_diagnostic", "empirical_maxmin", "estimate_hitting_value",
]

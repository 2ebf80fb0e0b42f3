"""Label-count-constrained assignment of unlabeled examples to classes."""

from .core import Assignment, InfeasibleCounts, assignment_objective, check_counts, greedy_init
from .oracle import InstanceTooLarge, brute_force, n_feasible
from .simplex import SimplexError, solve_simplex
from .switching import solve_switching, switch_candidates

SOLVERS = ("switching", "simplex")


def solve(C, counts, init: Assignment, solver: str = "switching") -> Assignment:
    """Dispatch to one of the named solvers, warm-started from ``init``."""
    if solver == "switching":
        return solve_switching(C, counts, init)
    if solver == "simplex":
        return solve_simplex(C, counts, init=init)
    raise ValueError(f"unknown assignment solver {solver!r}; expected one of {SOLVERS}")


__all__ = [
    "Assignment",
    "InfeasibleCounts",
    "InstanceTooLarge",
    "SOLVERS",
    "SimplexError",
    "assignment_objective",
    "brute_force",
    "check_counts",
    "greedy_init",
    "n_feasible",
    "solve",
    "solve_simplex",
    "solve_switching",
    "switch_candidates",
]

"""Search orchestration: lazy solving, eager solving and reference oracles."""

from typing import Optional

from ..core import SourceProblem, typecheck
from ..decompose import DecomposedProblem, decompose_problem
from ..reduce import reduce_formula, to_linexpr
from .oracle import bruteforce_source, check_model, evaluate, solve_bruteforce
from .search import Engine, Limits, SolveResult, Stats, optimize, solve

DEFAULT_REDUCTION_LIMIT = 2_000_000


def eager_problem(problem: SourceProblem, limit: Optional[int] = DEFAULT_REDUCTION_LIMIT
                  ) -> DecomposedProblem:
    """Reduce the whole assertion to QFLIA; no membership constraints remain."""
    typecheck(problem)
    f = reduce_formula(problem.assertion, limit=limit)
    obj = None
    if problem.objective is not None:
        obj = (problem.objective[0], to_linexpr(problem.objective[1]))
    bounds = dict(problem.declarations)
    return DecomposedProblem(f, [], bounds, obj, list(bounds), [])


def solve_eager(problem: SourceProblem, limits: Optional[Limits] = None, *,
                limit: Optional[int] = DEFAULT_REDUCTION_LIMIT, optimize_objective: bool = False
                ) -> SolveResult:
    p = eager_problem(problem, limit)
    if optimize_objective and p.objective is not None:
        return optimize(p, limits)
    return solve(p, limits)


def solve_lazy(problem: SourceProblem, limits: Optional[Limits] = None, *,
               optimize_objective: bool = False, log: bool = False) -> SolveResult:
    """Typecheck, decompose and run the lazy engine on a parsed problem."""
    typecheck(problem)
    p = decompose_problem(problem)
    if optimize_objective and p.objective is not None:
        return optimize(p, limits, log)
    return solve(p, limits, log)


__all__ = [
    "Engine", "Limits", "SolveResult", "Stats", "solve", "optimize", "solve_eager", "solve_lazy",
    "eager_problem", "solve_bruteforce", "bruteforce_source", "evaluate", "check_model",
]

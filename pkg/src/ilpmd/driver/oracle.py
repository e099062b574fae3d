"""Reference evaluators used as test oracles.

``evaluate`` interprets D formulas directly over concrete integers, with
no reduction, decomposition or propagation in between, so it can audit
models independently of the solver.  The brute-force solvers enumerate
every assignment in the declared bounds.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Mapping, Optional

from .. import qflia
from ..core import (Add, Const, Exists, Fst, InputTable, Le, Mul, Not, Or, Pair, Prod, Sel, Snd,
                    SourceProblem, Union_, Var)
from ..decompose import DecomposedProblem, expand
from .search import SolveResult, Stats

MAX_ASSIGNMENTS = 10**7


class SearchSpaceTooLarge(ValueError):
    pass


def eval_term(t, env: Mapping[str, object]):
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Add):
        return eval_term(t.left, env) + eval_term(t.right, env)
    if isinstance(t, Mul):
        return t.k * eval_term(t.term, env)
    if isinstance(t, Pair):
        return eval_term(t.left, env), eval_term(t.right, env)
    if isinstance(t, Fst):
        return eval_term(t.term, env)[0]
    if isinstance(t, Snd):
        return eval_term(t.term, env)[1]
    raise TypeError(f"not a term: {t!r}")


def eval_table(d, env: Mapping[str, object]) -> Iterator:
    if isinstance(d, InputTable):
        for row in d.rows:
            yield eval_term(row, env)
    elif isinstance(d, Sel):
        inner = dict(env)
        for row in eval_table(d.table, env):
            inner[d.binder] = row
            if evaluate(d.cond, inner):
                yield row
    elif isinstance(d, Prod):
        right = list(eval_table(d.right, env))
        for a in eval_table(d.left, env):
            for b in right:
                yield a, b
    elif isinstance(d, Union_):
        yield from eval_table(d.left, env)
        yield from eval_table(d.right, env)
    else:
        raise TypeError(f"not a table: {d!r}")


def evaluate(f, env: Mapping[str, object]) -> bool:
    """Truth of a D formula under an assignment of its free variables."""
    if isinstance(f, Le):
        return eval_term(f.left, env) <= eval_term(f.right, env)
    if isinstance(f, Exists):
        return any(True for _ in eval_table(f.table, env))
    if isinstance(f, Not):
        return not evaluate(f.arg, env)
    if isinstance(f, Or):
        return evaluate(f.left, env) or evaluate(f.right, env)
    raise TypeError(f"not a formula: {f!r}")


def _space(names, bounds):
    ranges = []
    total = 1
    for v in names:
        lo, hi = bounds.get(v, (None, None))
        if lo is None or hi is None:
            raise SearchSpaceTooLarge(f"variable {v} is unbounded")
        if lo > hi:
            return None
        ranges.append(range(lo, hi + 1))
        total *= hi - lo + 1
        if total > MAX_ASSIGNMENTS:
            raise SearchSpaceTooLarge(f"more than {MAX_ASSIGNMENTS} assignments")
    return ranges


def _scan(names, ranges, holds, objective) -> SolveResult:
    stats = Stats()
    best, best_val = None, None
    if ranges is not None:
        for values in itertools.product(*ranges):
            stats.nodes += 1
            env = dict(zip(names, values))
            if not holds(env):
                continue
            if objective is None:
                return SolveResult("sat", env, None, stats, env)
            val = objective(env)
            if best is None or (val > best_val if objective.maximize else val < best_val):
                best, best_val = env, val
    if objective is None:
        return SolveResult("unsat", stats=stats)
    if best is None:
        return SolveResult("infeasible", stats=stats)
    return SolveResult("optimal", best, best_val, stats, best)


class _Objective:
    def __init__(self, direction, fn):
        self.maximize = direction == "maximize"
        self.fn = fn

    def __call__(self, env):
        return self.fn(env)


def solve_bruteforce(p: DecomposedProblem, optimize: Optional[bool] = None) -> SolveResult:
    """Enumerate every assignment of a decomposed problem.

    Memberships are expanded into disjunctions.  ``optimize`` defaults to
    whether the problem has an objective.
    """
    names = p.variables()
    ranges = _space(names, p.bounds)
    f = expand(p)
    obj = None
    if optimize is None:
        optimize = p.objective is not None
    if optimize:
        direction, expr = p.objective
        obj = _Objective(direction, expr.evaluate)
    res = _scan(names, ranges, lambda env: qflia.evaluate(f, env), obj)
    res.model = {v: res.model[v] for v in p.user_vars if v in res.model}
    return res


def bruteforce_source(problem: SourceProblem, optimize: Optional[bool] = None) -> SolveResult:
    """Enumerate the declared variables and evaluate the D formula directly."""
    names = sorted(problem.declarations)
    ranges = _space(names, problem.declarations)
    obj = None
    if optimize is None:
        optimize = problem.objective is not None
    if optimize:
        direction, term = problem.objective
        obj = _Objective(direction, lambda env: eval_term(term, env))
    return _scan(names, ranges, lambda env: evaluate(problem.assertion, env), obj)


def check_model(problem: SourceProblem, model: Mapping[str, int]) -> bool:
    """Does ``model`` satisfy the declarations and the assertion?"""
    for v, (lo, hi) in problem.declarations.items():
        if v not in model:
            return False
        if (lo is not None and model[v] < lo) or (hi is not None and model[v] > hi):
            return False
    return evaluate(problem.assertion, model)

"""Eager reduction of table formulas to QFLIA.

Every table expression is turned into a list of guarded rows ``(row, guard)``
meaning "row is in the table iff guard holds"; nonemptiness then becomes the
disjunction of the guards.  Selection binders are handled by passing an
environment from binder names to row terms instead of rewriting the
condition text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from . import qflia
from .core import (
    Add, Const, Exists, Fst, InputTable, Le, Mul, Not, Or, Pair, Prod, Sel, Snd, Union_, Var,
    conj, eq, term_vars,
)
from .core import Formula, Table, Term


class ReductionTooLarge(Exception):
    pass


@dataclass
class GuardedRow:
    row: Term
    guard: qflia.QFormula


class _Budget:
    def __init__(self, limit: Optional[int]):
        self.limit = limit
        self.rows = 0

    def charge(self, n: int):
        self.rows += n
        if self.limit is not None and self.rows > self.limit:
            raise ReductionTooLarge(f"eager reduction exceeds {self.limit} guarded rows")


# --------------------------------------------------------------------------
# terms


def substitute(t: Term, env: Dict[str, Term]) -> Term:
    if not env:
        return t
    if isinstance(t, Var):
        return env.get(t.name, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, Add):
        return Add(substitute(t.left, env), substitute(t.right, env))
    if isinstance(t, Pair):
        return Pair(substitute(t.left, env), substitute(t.right, env))
    if isinstance(t, Mul):
        return Mul(t.k, substitute(t.term, env))
    if isinstance(t, Fst):
        return Fst(substitute(t.term, env))
    return Snd(substitute(t.term, env))


def eliminate_pairs(t):
    """Rewrite ``fst((a, b))`` to ``a`` and ``snd((a, b))`` to ``b`` everywhere.

    Accepts a term or a core formula; pair constructors may remain only where
    a whole row is still being passed around (never under ``Le``).
    """
    if isinstance(t, Le):
        return Le(eliminate_pairs(t.left), eliminate_pairs(t.right))
    if isinstance(t, Not):
        return Not(eliminate_pairs(t.arg))
    if isinstance(t, Or):
        return Or(eliminate_pairs(t.left), eliminate_pairs(t.right))
    if isinstance(t, Exists):
        return t
    if isinstance(t, (Const, Var)):
        return t
    if isinstance(t, Add):
        return Add(eliminate_pairs(t.left), eliminate_pairs(t.right))
    if isinstance(t, Mul):
        return Mul(t.k, eliminate_pairs(t.term))
    if isinstance(t, Pair):
        return Pair(eliminate_pairs(t.left), eliminate_pairs(t.right))
    inner = eliminate_pairs(t.term)
    if not isinstance(inner, Pair):
        raise ValueError(f"accessor applied to a non-pair term: {inner!r}")
    return inner.left if isinstance(t, Fst) else inner.right


def to_linexpr(t: Term) -> qflia.LinExpr:
    if isinstance(t, Const):
        return qflia.LinExpr(const=t.value)
    if isinstance(t, Var):
        return qflia.LinExpr.var(t.name)
    if isinstance(t, Add):
        return to_linexpr(t.left) + to_linexpr(t.right)
    if isinstance(t, Mul):
        return to_linexpr(t.term).scale(t.k)
    raise ValueError(f"not a pair-free integer term: {t!r}")


def linear(t: Term, env: Dict[str, Term]) -> qflia.LinExpr:
    return to_linexpr(eliminate_pairs(substitute(t, env)))


# --------------------------------------------------------------------------
# tables and formulas


def _table_rows(d: InputTable, env: Dict[str, Term]) -> List[Term]:
    if env:
        cells = d.cells
        if cells is None or any(c.var in env for row in cells for c in row):
            return [substitute(r, env) for r in d.rows]
    return list(d.rows)


def reduce_table(d: Table, env: Optional[Dict[str, Term]] = None, *,
                 limit: Optional[int] = None, _budget: Optional[_Budget] = None) -> List[GuardedRow]:
    budget = _budget or _Budget(limit)
    env = env or {}
    if isinstance(d, InputTable):
        rows = _table_rows(d, env)
        budget.charge(len(rows))
        return [GuardedRow(r, qflia.TRUE) for r in rows]
    if isinstance(d, Sel):
        out = []
        for gr in reduce_table(d.table, env, _budget=budget):
            cond = reduce_formula(d.cond, {**env, d.binder: gr.row}, _budget=budget)
            out.append(GuardedRow(gr.row, qflia.conj(gr.guard, cond)))
        return out
    if isinstance(d, Prod):
        left = reduce_table(d.left, env, _budget=budget)
        right = reduce_table(d.right, env, _budget=budget)
        budget.charge(len(left) * len(right))
        return [GuardedRow(Pair(a.row, b.row), qflia.conj(a.guard, b.guard))
                for a in left for b in right]
    if isinstance(d, Union_):
        return reduce_table(d.left, env, _budget=budget) + reduce_table(d.right, env, _budget=budget)
    raise TypeError(f"not a table: {d!r}")


def reduce_formula(f: Formula, env: Optional[Dict[str, Term]] = None, *,
                   limit: Optional[int] = None, _budget: Optional[_Budget] = None) -> qflia.QFormula:
    budget = _budget or _Budget(limit)
    env = env or {}
    if isinstance(f, Le):
        return qflia.le(linear(f.left, env), linear(f.right, env))
    if isinstance(f, Exists):
        return qflia.disj_all(gr.guard for gr in reduce_table(f.table, env, _budget=budget))
    if isinstance(f, Not):
        return qflia.neg(reduce_formula(f.arg, env, _budget=budget))
    if isinstance(f, Or):
        return qflia.disj(reduce_formula(f.left, env, _budget=budget),
                          reduce_formula(f.right, env, _budget=budget))
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# QBF gadget


@dataclass(frozen=True)
class QVar:
    name: str


@dataclass(frozen=True)
class QNot:
    arg: object


@dataclass(frozen=True)
class QAnd:
    left: object
    right: object


@dataclass(frozen=True)
class QOr:
    left: object
    right: object


@dataclass(frozen=True)
class QForall:
    var: str
    body: object


@dataclass(frozen=True)
class QExists:
    var: str
    body: object


BOOLS = InputTable("B", [Const(0), Const(1)])


def encode_qbf(q, table: InputTable = BOOLS) -> Formula:
    """Encode a closed QBF as a closed formula quantifying over ``{0, 1}``."""

    def enc(node, bound):
        if isinstance(node, QForall):
            return Not(Exists(Sel(node.var, Not(enc(node.body, bound | {node.var})), table)))
        if isinstance(node, QExists):
            return Exists(Sel(node.var, enc(node.body, bound | {node.var}), table))
        if isinstance(node, QVar):
            if node.name not in bound:
                raise ValueError(f"free Boolean variable {node.name}")
            return eq(Var(node.name), Const(1))
        if isinstance(node, QNot):
            if isinstance(node.arg, QVar):
                if node.arg.name not in bound:
                    raise ValueError(f"free Boolean variable {node.arg.name}")
                return eq(Var(node.arg.name), Const(0))
            return Not(enc(node.arg, bound))
        if isinstance(node, QAnd):
            return conj(enc(node.left, bound), enc(node.right, bound))
        if isinstance(node, QOr):
            return Or(enc(node.left, bound), enc(node.right, bound))
        raise TypeError(f"not a QBF node: {node!r}")

    return enc(q, frozenset())


def evaluate_qbf(q, env: Optional[Dict[str, bool]] = None) -> bool:
    env = env or {}
    if isinstance(q, QForall):
        return all(evaluate_qbf(q.body, {**env, q.var: b}) for b in (False, True))
    if isinstance(q, QExists):
        return any(evaluate_qbf(q.body, {**env, q.var: b}) for b in (False, True))
    if isinstance(q, QVar):
        if q.name not in env:
            raise ValueError(f"free Boolean variable {q.name}")
        return env[q.name]
    if isinstance(q, QNot):
        return not evaluate_qbf(q.arg, env)
    if isinstance(q, QAnd):
        return evaluate_qbf(q.left, env) and evaluate_qbf(q.right, env)
    return evaluate_qbf(q.left, env) or evaluate_qbf(q.right, env)


def formula_vars(f: Formula, bound=frozenset()) -> set:
    """Free integer variables of a formula (selection binders excluded)."""
    out = set()
    stack = [(f, bound)]
    while stack:
        node, b = stack.pop()
        if isinstance(node, Le):
            out |= (term_vars(node.left) | term_vars(node.right)) - b
        elif isinstance(node, Exists):
            stack.append((node.table, b))
        elif isinstance(node, Not):
            stack.append((node.arg, b))
        elif isinstance(node, (Or, Prod, Union_)):
            stack.append((node.left, b))
            stack.append((node.right, b))
        elif isinstance(node, Sel):
            stack.append((node.cond, b | {node.binder}))
            stack.append((node.table, b))
        elif isinstance(node, InputTable):
            for r in node.rows:
                out |= term_vars(r) - b
    return out

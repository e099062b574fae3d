"""Decomposition of existential table formulas into a QFLIA part plus
(conditional) membership constraints over input tables.

Each positive ``exists D`` gets a fresh witness row ``x`` and the membership
``x in D`` is pushed down to input tables:

* ``(x, y) in D * E``        becomes ``x in D and y in E``
* ``x in D + E``             becomes ``x in D or x in E``
* ``x in sel(y, F, D)``      becomes ``F[y/x] and x in D``

Every membership over an input table is guarded by a fresh 0/1 variable
``g`` with the one-directional meaning ``g = 1 => membership``; the atom
``g >= 1`` takes the membership's place in the Boolean structure.  Guards that
end up as top-level conjuncts are dropped and their memberships become
unconditional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import qflia
from .core import (
    Cell, DType, Exists, InputTable, IntType, Le, Not, Or, Pair, Prod, Sel, SourceProblem,
    Union_, Var, cell_of_term, is_existential, row_leaves, schema_of,
)
from .reduce import eliminate_pairs, linear, substitute, to_linexpr


class FragmentError(Exception):
    """The input formula is outside the existential fragment."""


Bound = Tuple[Optional[int], Optional[int]]


@dataclass
class MembershipConstraint:
    witness: Tuple[str, ...]
    rows: Sequence[Tuple[Cell, ...]]
    guard: Optional[str] = None
    table: str = "?"

    def __post_init__(self):
        if not self.witness or not self.rows:
            raise ValueError("membership constraints need k >= 1 columns and l >= 1 rows")
        if len(set(self.witness)) != len(self.witness):
            raise ValueError("witness variables must be distinct")

    @property
    def arity(self) -> int:
        return len(self.witness)

    def variables(self) -> set:
        out = set(self.witness)
        if self.guard:
            out.add(self.guard)
        for row in self.rows:
            out.update(c.var for c in row if c.var is not None)
        return out


@dataclass
class DecomposedProblem:
    qflia: qflia.QFormula
    memberships: List[MembershipConstraint]
    bounds: Dict[str, Bound]
    objective: Optional[Tuple[str, qflia.LinExpr]] = None
    user_vars: List[str] = field(default_factory=list)
    guards: List[str] = field(default_factory=list)

    def variables(self) -> List[str]:
        names = set(self.bounds) | qflia.variables(self.qflia)
        for m in self.memberships:
            names |= m.variables()
        if self.objective is not None:
            names |= set(self.objective[1].coeffs)
        return sorted(names)


def cell_linexpr(c: Cell) -> qflia.LinExpr:
    if c.var is None:
        return qflia.LinExpr(const=c.offset)
    return qflia.LinExpr({c.var: 1}, c.offset)


def membership_to_disjunction(m: MembershipConstraint) -> qflia.QFormula:
    """The membership as ``OR_j AND_i x_i = cell[j][i]`` (guard ignored)."""
    xs = [qflia.LinExpr.var(x) for x in m.witness]
    return qflia.disj_all(
        qflia.conj_all(qflia.eq(x, cell_linexpr(c)) for x, c in zip(xs, row))
        for row in m.rows)


def expand(p: DecomposedProblem) -> qflia.QFormula:
    """Pure QFLIA equivalent of a decomposed problem (memberships expanded)."""
    parts = [p.qflia]
    for m in p.memberships:
        body = membership_to_disjunction(m)
        if m.guard is not None:
            body = qflia.disj(qflia.le(qflia.LinExpr.var(m.guard), qflia.LinExpr()), body)
        parts.append(body)
    return qflia.conj_all(parts)


class _Decomposer:
    def __init__(self):
        self.counter = 0
        self.memberships: List[MembershipConstraint] = []
        self.defs: List[qflia.QFormula] = []
        self.guards: List[str] = []
        self.witnesses: List[str] = []
        self._flat_cache: Dict[int, tuple] = {}

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}!{self.counter}"

    def witness_row(self, schema: DType):
        base = self.fresh("w")
        leaves = []

        def build(t):
            if isinstance(t, IntType):
                name = f"{base}.{len(leaves) + 1}"
                leaves.append(name)
                return Var(name)
            return Pair(build(t.left), build(t.right))

        row = build(schema)
        self.witnesses.extend(leaves)
        return row

    def formula(self, f, positive: bool, env) -> qflia.QFormula:
        if isinstance(f, Le):
            atom = qflia.le(linear(f.left, env), linear(f.right, env))
            return atom if positive else qflia.nnf(atom, False)
        if isinstance(f, Not):
            return self.formula(f.arg, not positive, env)
        if isinstance(f, Or):
            left = self.formula(f.left, positive, env)
            right = self.formula(f.right, positive, env)
            return qflia.disj(left, right) if positive else qflia.conj(left, right)
        if isinstance(f, Exists):
            if not positive:
                raise FragmentError("exists occurs with negative polarity")
            return self.member(self.witness_row(schema_of(f.table)), f.table, env)
        raise TypeError(f"not a formula: {f!r}")

    def member(self, x, d, env) -> qflia.QFormula:
        if isinstance(d, InputTable):
            witness = tuple(v.name for v in row_leaves(x))
            rows = self.flatten(d, env)
            guard = self.fresh("g")
            self.guards.append(guard)
            self.memberships.append(MembershipConstraint(witness, rows, guard, d.name))
            return qflia.le(qflia.LinExpr(const=1), qflia.LinExpr.var(guard))
        if isinstance(d, Sel):
            cond = self.formula(d.cond, True, {**env, d.binder: x})
            return qflia.conj(cond, self.member(x, d.table, env))
        if isinstance(d, Prod):
            return qflia.conj(self.member(x.left, d.left, env), self.member(x.right, d.right, env))
        if isinstance(d, Union_):
            return qflia.disj(self.member(x, d.left, env), self.member(x, d.right, env))
        raise TypeError(f"not a table: {d!r}")

    def flatten(self, d: InputTable, env):
        cells = d.cells
        closed = cells is not None and not any(c.var in env for row in cells for c in row)
        if closed:
            return cells
        out = []
        for r in d.rows:
            row = []
            for leaf in row_leaves(eliminate_pairs(substitute(r, env))):
                c = cell_of_term(leaf)
                if c is None:
                    # variable abstraction for anything richer than v + c
                    a = self.fresh("a")
                    self.defs.append(qflia.eq(qflia.LinExpr.var(a), to_linexpr(leaf)))
                    c = Cell(a, 0)
                row.append(c)
            out.append(tuple(row))
        return tuple(out)


def decompose(f, bounds: Optional[Dict[str, Bound]] = None,
              objective=None) -> DecomposedProblem:
    """Decompose an existential formula; ``bounds`` are the declared variables."""
    if not is_existential(f):
        raise FragmentError("formula is not in the existential fragment")
    bounds = dict(bounds or {})
    dec = _Decomposer()
    body = dec.formula(f, True, {})
    body = qflia.conj_all([body, *dec.defs])

    # unconditional memberships: their guard atom is a top-level conjunct
    top = list(body.args) if isinstance(body, qflia.And) else [body]
    by_guard = {m.guard: m for m in dec.memberships}
    kept = []
    for part in top:
        g = guard_literal(part)
        if g is not None and g in by_guard:
            by_guard[g].guard = None
        else:
            kept.append(part)
    body = qflia.conj_all(kept)
    guards = [m.guard for m in dec.memberships if m.guard is not None]
    for g in guards:
        bounds[g] = (0, 1)
    _witness_hulls(dec, bounds)

    obj = None
    if objective is not None:
        direction, term = objective
        obj = (direction, to_linexpr(term))
    user = [v for v in bounds if "!" not in v]
    return DecomposedProblem(body, dec.memberships, bounds, obj, user, guards)


def guard_literal(part) -> Optional[str]:
    """Name ``g`` when ``part`` is the atom ``g >= 1``, else None."""
    if isinstance(part, qflia.Atom) and part.bound == -1 and len(part.coeffs) == 1:
        v, c = part.coeffs[0]
        if c == -1:
            return v
    return None


def _cell_interval(c: Cell, bounds) -> Tuple[float, float]:
    if c.var is None:
        return c.offset, c.offset
    lo, hi = bounds.get(c.var, (None, None))
    return (-math.inf if lo is None else lo + c.offset,
            math.inf if hi is None else hi + c.offset)


def _witness_hulls(dec: _Decomposer, bounds):
    """Bound each witness leaf by the hull of every column it can be matched to.

    A witness is only ever constrained together with one of its memberships,
    so restricting it to the values its tables can offer is equisatisfiable.
    """
    hull: Dict[str, List[float]] = {}
    columns: Dict[Tuple[int, int], Tuple[float, float]] = {}
    for m in dec.memberships:
        for i, x in enumerate(m.witness):
            key = (id(m.rows), i)
            if key not in columns:
                ivs = [_cell_interval(row[i], bounds) for row in m.rows]
                columns[key] = min(a for a, _ in ivs), max(b for _, b in ivs)
            lo, hi = columns[key]
            if x in hull:
                hull[x][0] = min(hull[x][0], lo)
                hull[x][1] = max(hull[x][1], hi)
            else:
                hull[x] = [lo, hi]
    for x in dec.witnesses:
        lo, hi = hull.get(x, (-math.inf, math.inf))
        bounds[x] = (None if lo == -math.inf else int(lo), None if hi == math.inf else int(hi))


def decompose_problem(problem: SourceProblem) -> DecomposedProblem:
    return decompose(problem.assertion, problem.declarations, problem.objective)

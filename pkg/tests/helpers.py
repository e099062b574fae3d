"""Random instance generators shared by the test modules."""

import csv
import itertools
import random

from ilpmd.core import (Add, Cell, Const, Exists, Fst, InputTable, Le, Mul, Not, Or, Prod, Sel,
                        Snd, SourceProblem, Union_, Var, conj_all, eq, lt)
from ilpmd.decompose import DecomposedProblem, MembershipConstraint
from ilpmd import qflia
from ilpmd.reduce import QAnd, QExists, QForall, QNot, QOr, QVar

BOUND = 10


def column(r, i, k):
    t = r
    for _ in range(i):
        t = Snd(t)
    return t if i == k - 1 else Fst(t)


class _Gen:
    def __init__(self, rng, n_vars, symbolic=0.3, max_rows=8):
        self.rng = rng
        self.vars = [f"x{i}" for i in range(n_vars)]
        self.symbolic = symbolic
        self.max_rows = max_rows
        self.tables = []
        self.binders = 0

    def cell(self):
        rng = self.rng
        if rng.random() < self.symbolic:
            return Cell(rng.choice(self.vars), rng.choice((0, 0, 1, -2)))
        return Cell(None, rng.randint(-5, 5))

    def table(self, k):
        rows = [[self.cell() for _ in range(k)] for _ in range(self.rng.randint(1, self.max_rows))]
        t = InputTable.from_cells(f"T{len(self.tables)}", rows)
        self.tables.append(t)
        return t

    def term(self, scope):
        """Integer term over user variables and the columns of bound rows."""
        rng = self.rng
        choices = [Var(v) for v in self.vars] + [Const(rng.randint(-5, 5))]
        if scope and rng.random() < 0.7:
            choices = list(scope[-1][1])
        t = rng.choice(choices)
        if rng.random() < 0.2:
            t = Add(t, rng.choice([Var(v) for v in self.vars] + [Const(rng.randint(-3, 3))]))
        if rng.random() < 0.1:
            t = Mul(rng.choice((-1, 2)), t)
        return t

    def atom(self, scope):
        a = self.term(scope)
        b = self.term(scope[:-1] if scope and self.rng.random() < 0.6 else scope)
        return self.rng.choice((Le(a, b), eq(a, b), eq(a, b), lt(a, b)))

    def base(self):
        k = self.rng.randint(1, 3)
        if self.rng.random() < 0.15 and len(self.tables) <= 1:
            t1, t2 = self.table(k), self.table(k)
            return Union_(t1, t2), lambda r, k=k: [column(r, i, k) for i in range(k)]
        t = self.table(k)
        return t, lambda r, k=k: [column(r, i, k) for i in range(k)]

    def tab(self, scope, depth):
        """A random table expression and a function giving the leaves of its rows."""
        rng = self.rng
        roll = rng.random()
        if roll < 0.2 and len(self.tables) <= 1:
            k1, k2 = rng.randint(1, 2), rng.randint(1, 2)
            left, right = self.table(k1), self.table(k2)
            inner = Prod(left, right)

            def leaves(r, k1=k1, k2=k2):
                return ([column(Fst(r), i, k1) for i in range(k1)]
                        + [column(Snd(r), i, k2) for i in range(k2)])
        else:
            inner, leaves = self.base()
        if roll > 0.9:
            return inner, leaves
        self.binders += 1
        r = f"r{self.binders}"
        inner_scope = scope + [(r, leaves(Var(r)))]
        cond = conj_all(self.cond(inner_scope, depth - 1) for _ in range(rng.randint(1, 2)))
        return Sel(r, cond, inner), leaves

    def cond(self, scope, depth):
        rng = self.rng
        roll = rng.random()
        if depth > 0 and roll < 0.12 and len(self.tables) < 3:
            t, _ = self.tab(scope, depth - 1)
            return Exists(t)
        if roll < 0.22:
            return Or(self.atom(scope), self.atom(scope))
        if roll < 0.3:
            return Not(self.atom(scope))
        return self.atom(scope)

    def formula(self, scope, depth):
        rng = self.rng
        roll = rng.random()
        if roll < 0.55 and len(self.tables) < 3:
            f = Exists(self.tab(scope, depth)[0])
            return Not(Not(f)) if rng.random() < 0.05 else f
        if roll < 0.75:
            f = self.atom(scope)
            return Not(f) if rng.random() < 0.3 else f
        if depth > 0:
            return Or(self.formula(scope, depth - 1), self.formula(scope, depth - 1))
        return self.atom(scope)


def random_existential(seed, max_vars=3, bound=BOUND):
    """A random problem in the existential fragment with every variable in [-bound, bound].

    Up to three input tables of at most eight rows and three columns; about
    30% of the cells are symbolic.
    """
    for attempt in range(100):
        rng = random.Random(f"{seed}/{attempt}")
        n_vars = rng.choice([1, 1, 2, 2, 2, 3][: 2 * max_vars])
        g = _Gen(rng, n_vars)
        parts = [Exists(g.tab([], 2)[0])]
        while rng.random() < 0.6 and len(g.tables) < 3:
            parts.append(g.formula([], 2))
        if len(g.tables) <= 3:
            break
    f = conj_all(parts)
    decls = {v: (-bound, bound) for v in g.vars}
    return SourceProblem(decls, {t.name: t for t in g.tables}, f)


def qflia_models(f, names, lo, hi):
    """Every assignment of ``names`` over ``[lo, hi]`` that satisfies ``f``."""
    for values in itertools.product(range(lo, hi + 1), repeat=len(names)):
        env = dict(zip(names, values))
        if qflia.evaluate(f, env):
            yield env


def qflia_sat(f, names, lo, hi):
    return next(qflia_models(f, names, lo, hi), None) is not None


def random_membership_problem(seed, lo=-3, hi=3):
    """A small decomposed problem: a few (guarded) memberships plus linear side
    constraints, all variables bounded in ``[lo, hi]``."""
    rng = random.Random(seed)
    user = [f"v{i}" for i in range(rng.randint(1, 2))]
    bounds = {v: (lo, hi) for v in user}
    members = []
    side = []
    guards = []
    for m in range(rng.randint(1, 2)):
        k = rng.randint(1, 2)
        wit = tuple(f"w{m}_{i}" for i in range(k))
        for x in wit:
            bounds[x] = (lo, hi)
        rows = []
        for _ in range(rng.randint(1, 4)):
            rows.append(tuple(Cell(rng.choice(user), rng.choice((0, 1))) if rng.random() < 0.3
                              else Cell(None, rng.randint(lo, hi)) for _ in range(k)))
        guard = None
        if rng.random() < 0.3:
            guard = f"g{m}"
            bounds[guard] = (0, 1)
            guards.append(guard)
        members.append(MembershipConstraint(wit, rows, guard, f"T{m}"))
        side.append(qflia.le(qflia.LinExpr.var(rng.choice(wit)), qflia.LinExpr.var(rng.choice(user))))
    if guards:
        side.append(qflia.disj_all(qflia.le(qflia.LinExpr(const=1), qflia.LinExpr.var(g))
                                   for g in guards))
    if rng.random() < 0.5:
        a = qflia.LinExpr({rng.choice(user): rng.choice((1, 2, -1))}, rng.randint(-2, 2))
        side.append(qflia.disj(qflia.le(a, qflia.LinExpr(const=0)),
                               qflia.le(qflia.LinExpr.var(user[0]), qflia.LinExpr(const=-1))))
    obj = None
    if rng.random() < 0.4:
        obj = (rng.choice(("maximize", "minimize")),
               qflia.LinExpr({v: rng.choice((1, -1, 2)) for v in user}))
    return DecomposedProblem(qflia.conj_all(side), members, bounds, obj, list(user), guards)


def _csv_rows(text):
    return [tuple(int(c) for c in row) for row in csv.reader(text.splitlines())
            if row and not row[0].startswith("#")]


def portfolio_optimum(files, amounts, sector_divisor, smallcap_divisor=4):
    """Best objective of a generated portfolio instance by enumerating stock tuples.

    Reads the generated CSV tables directly and never touches the solver.
    Returns None when no tuple of distinct stocks meets the caps.
    """
    stocks = next(_csv_rows(t) for f, t in files.items() if f.endswith("_stocks.csv"))
    quotes = dict(next(_csv_rows(t) for f, t in files.items() if f.endswith("_quotes.csv")))
    info = {sid: (cap, sector) for sid, cap, sector in stocks}
    total = sum(amounts)
    best = None
    for pick in itertools.permutations(sorted(info), len(amounts)):
        per_sector = {}
        small = 0
        for sid, a in zip(pick, amounts):
            cap, sector = info[sid]
            per_sector[sector] = per_sector.get(sector, 0) + a
            if cap == 0:
                small += a
        if any(sector_divisor * v > total for v in per_sector.values()):
            continue
        if smallcap_divisor * small > total:
            continue
        value = sum(a * quotes[sid] for sid, a in zip(pick, amounts))
        best = value if best is None else max(best, value)
    return best


def random_qbf(rng, n_vars=4, connectives=6):
    """A closed prenex QBF over at most ``n_vars`` variables."""
    names = [f"p{i}" for i in range(rng.randint(1, n_vars))]

    def body(budget):
        if budget <= 0 or rng.random() < 0.3:
            v = QVar(rng.choice(names))
            return QNot(v) if rng.random() < 0.4 else v
        op = rng.choice((QAnd, QOr, QNot))
        if op is QNot:
            return QNot(body(budget - 1))
        left = rng.randint(0, budget - 1)
        return op(body(left), body(budget - 1 - left))

    q = body(rng.randint(1, connectives))
    for v in reversed(names):
        q = (QForall if rng.random() < 0.5 else QExists)(v, q)
    return q

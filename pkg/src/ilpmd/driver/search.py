"""Branch-and-bound search combining the LIA engine with membership
constraints.

Each node runs LIA and membership propagation to a joint fixpoint, then the
exact LP relaxation, then branches.  Branch priority: an open clause over
guard variables, a fractional LP value, a data-driven membership split, and
finally a residual equality split on an atom the current model violates.
Every split partitions the integer space, so chronological backtracking over
all children is complete.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..decompose import DecomposedProblem
from ..lia.bounds import BoundsStore, LinearConstraint, Trail, propagate_bounds
from ..lia.reify import reify
from ..lia.simplex import branch_select_int, lp_check
from ..membership import BoundSplit, EqualitySplit, MembershipState

DEFAULT_BOUND = 2**30
# joint LIA/membership rounds per node; stops slow descents such as x < y <= x
MAX_ROUNDS = 25


@dataclass
class Limits:
    nodes: Optional[int] = None
    time: Optional[float] = None
    default_bound: int = DEFAULT_BOUND
    cancel: Optional[threading.Event] = None


@dataclass
class Stats:
    nodes: int = 0
    branches: int = 0
    propagations: int = 0
    equality_splits: int = 0
    bound_splits: int = 0
    guard_splits: int = 0
    int_splits: int = 0
    lp_calls: int = 0
    conflicts: int = 0

    def as_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


@dataclass
class SolveResult:
    status: str
    model: Dict[str, int] = field(default_factory=dict)
    objective: Optional[int] = None
    stats: Stats = field(default_factory=Stats)
    assignment: Dict[str, int] = field(default_factory=dict)
    witnesses: List = field(default_factory=list)
    log: List = field(default_factory=list)


class ResourceLimit(Exception):
    pass


class Engine:
    """One solver instance; owns all search state for one problem."""

    def __init__(self, p: DecomposedProblem, limits: Optional[Limits] = None, log: bool = False):
        self.problem = p
        self.limits = limits or Limits()
        self.stats = Stats()
        self.trail = Trail()
        self.store = BoundsStore(self.trail)
        self.events: Optional[list] = [] if log else None
        d = self.limits.default_bound

        names = p.variables()
        counter = [0]

        def fresh():
            counter[0] += 1
            name = f"b!{counter[0]}"
            while name in p.bounds:
                counter[0] += 1
                name = f"b!{counter[0]}"
            return name

        guard_names = set(p.guards)
        constraints, indicators = reify(p.qflia, fresh, zero_one=guard_names)
        for v in names:
            lo, hi = p.bounds.get(v, (None, None))
            self.store.add(v, -d if lo is None else lo, d if hi is None else hi)
        for b in indicators:
            self.store.add(b, 0, 1)
        for c in constraints:
            for v in c.variables():
                if v not in self.store:
                    self.store.add(v, -d, d)
        self.user_vars = [v for v in p.user_vars]
        ix = self.store.index
        self.guards = sorted(ix[g] for g in guard_names | set(indicators))
        self.guard_set = set(self.guards)

        # slot 0 holds the objective cut, replaced in place as incumbents improve
        self.cons: List[LinearConstraint] = [LinearConstraint((), 0)]
        for c in constraints:
            self.cons.append(LinearConstraint(tuple((ix[v], a) for v, a in c.coeffs), c.bound,
                                              None if c.guard is None else ix[c.guard]))
        self.watch: Dict[int, List[int]] = {}
        for ci, c in enumerate(self.cons):
            self._watch_add(ci, c)
        self.objective = None
        if p.objective is not None:
            direction, expr = p.objective
            self.objective = (direction, {ix[v]: c for v, c in expr.coeffs.items()}, expr.const)
            for v in self.objective[1]:
                self.watch.setdefault(v, []).append(0)
        self.clauses = self._find_clauses()

        cache: dict = {}
        self.members = [MembershipState(m, self.store, self.trail, cache) for m in p.memberships]
        self.member_watch: Dict[int, List[int]] = {}
        for mi, ms in enumerate(self.members):
            vs = set(ms.wx)
            if ms.guard is not None:
                vs.add(ms.guard)
            for j in ms.symbolic_rows:
                vs.update(v for v, _ in ms.cells[j] if v >= 0)
            for v in vs:
                self.member_watch.setdefault(v, []).append(mi)

        self.incumbent = None
        self.incumbent_value = None
        self._changed: List[int] = []
        self._start = None

    # ---------------------------------------------------------------- plumbing

    def _watch_add(self, ci: int, c: LinearConstraint):
        for v in c.variables():
            self.watch.setdefault(v, []).append(ci)

    def undo(self, payload):
        # only extra constraints are trailed by the engine itself
        c = self.cons.pop()
        for v in reversed(c.variables()):
            self.watch[v].pop()

    def add_constraint(self, coeffs, bound) -> int:
        c = LinearConstraint(tuple(coeffs), bound)
        ci = len(self.cons)
        self.cons.append(c)
        self._watch_add(ci, c)
        self.trail.record(self, None)
        return ci

    def _find_clauses(self):
        out = []
        for c in self.cons[1:]:
            if c.guard is None and c.coeffs and c.bound in (-1, 0) and \
                    all(v in self.guard_set for v, _ in c.coeffs):
                pos = [v for v, a in c.coeffs if a < 0]
                neg = [v for v, a in c.coeffs if a > 0]
                if all(a in (-1, 1) for _, a in c.coeffs) and len(neg) == c.bound + 1:
                    out.append((pos, neg))
        return out

    def _log(self, source, v):
        if self.events is not None:
            self.events.append((source, self.store.names[v], self.store.lb[v], self.store.ub[v]))

    def _check_limits(self):
        lim = self.limits
        if lim.nodes is not None and self.stats.nodes > lim.nodes:
            raise ResourceLimit("node limit")
        if lim.time is not None and time.monotonic() - self._start > lim.time:
            raise ResourceLimit("time limit")
        if lim.cancel is not None and lim.cancel.is_set():
            raise ResourceLimit("cancelled")

    # ------------------------------------------------------------- propagation

    def propagate(self) -> bool:
        store = self.store
        changed = self._changed
        changed.clear()

        def on_change(v, lo, hi):
            changed.append(v)
            if self.events is not None:
                self.events.append(("lia", store.names[v], lo, hi))

        queue = list(range(len(self.cons)))
        dirty = set(range(len(self.members)))
        for _ in range(MAX_ROUNDS):
            self.stats.propagations += 1
            if queue:
                ok = propagate_bounds(store, self.cons, watch=self.watch, initial=queue,
                                      log=on_change)
                if not ok:
                    return False
            for v in changed:
                dirty.update(self.member_watch.get(v, ()))
            changed.clear()
            queue = []
            for mi in sorted(dirty):
                ms = self.members[mi]
                ok, moved, equalities = ms.propagate()
                for v in moved:
                    self._log("membership", v)
                if not ok:
                    return False
                for x, v, off in equalities:
                    if self.events is not None:
                        self.events.append(("unique", store.names[x], store.names[v], off))
                    queue.append(self.add_constraint(((x, 1), (v, -1)), off))
                    queue.append(self.add_constraint(((x, -1), (v, 1)), -off))
                for v in moved:
                    queue.extend(self.watch.get(v, ()))
                    changed.append(v)
            dirty = set()
            for v in changed:
                dirty.update(self.member_watch.get(v, ()))
            changed.clear()
            if not queue and not dirty:
                return True
        return True

    def open_clause(self):
        """First clause not yet satisfied that cannot be satisfied by zeroing guards."""
        lb, ub = self.store.lb, self.store.ub
        for pos, neg in self.clauses:
            if any(lb[v] >= 1 for v in pos):
                continue
            if any(lb[v] < 1 for v in neg):
                continue
            for v in pos:
                if ub[v] >= 1:
                    return v
        return None

    def close_guards(self) -> bool:
        """All clauses are satisfiable with every open guard at 0: fix them so."""
        store = self.store
        moved = False
        for g in self.guards:
            if store.lb[g] < store.ub[g]:
                store.set_ub(g, 0)
                moved = True
        return moved

    # ------------------------------------------------------------------- search

    def active_constraints(self):
        lb = self.store.lb
        out = []
        for ci, c in enumerate(self.cons):
            if ci == 0 and not c.coeffs:
                continue
            if c.guard is None or lb[c.guard] >= 1:
                out.append(c)
        return out

    def value_of(self, model):
        lb, ub = self.store.lb, self.store.ub

        def value(v):
            q = model.get(v)
            if q is not None:
                return int(q)
            lo, hi = lb[v], ub[v]
            return lo if lo > 0 else (hi if hi < 0 else 0)

        return value

    def node(self):
        """Process the current node: returns "conflict", ("sat", values) or a child list."""
        self.stats.nodes += 1
        self._check_limits()
        if not self.propagate():
            return "conflict"
        if self.open_clause() is None and self.close_guards():
            if not self.propagate():
                return "conflict"
        self.stats.lp_calls += 1
        obj = None
        if self.objective is not None:
            obj = (self.objective[0], self.objective[1])
        lp = lp_check(self.active_constraints(), _ByIndex(self.store), obj, integer_rounding=True)
        if not lp.feasible:
            return "conflict"
        clause_guard = self.open_clause()
        if clause_guard is not None:
            self.stats.guard_splits += 1
            return [[("lb", clause_guard, 1)], [("ub", clause_guard, 0)]]
        frac = branch_select_int(lp.model)
        if frac is not None:
            v, f = frac
            self.stats.int_splits += 1
            return [[("ub", v, f)], [("lb", v, f + 1)]]
        value = self.value_of(lp.model)
        for mi, ms in enumerate(self.members):
            if not ms.active:
                continue
            if ms.consistent_under(value) is not None:
                continue
            decision = ms.suggest_branch() or self._residual(ms, value)
            return self._children(mi, decision)
        return ("sat", value)

    def _residual(self, ms: MembershipState, value):
        xs = [value(x) for x in ms.wx]
        for j in ms.candidates():
            for i, (vi, off) in enumerate(ms.cells[j]):
                rhs = off if vi < 0 else value(vi) + off
                if xs[i] != rhs and ms.atom_truth(i, vi, off) is None:
                    return EqualitySplit(ms.wx[i], None if vi < 0 else vi, off, i)
        raise AssertionError("membership violated but every atom is decided")

    def _children(self, mi: int, decision):
        if isinstance(decision, BoundSplit):
            self.stats.bound_splits += 1
            v, m = decision.var, decision.value
            return [[("ub", v, m - 1)], [("lb", v, m)]]
        self.stats.equality_splits += 1
        x, cv, off, col = decision.var, decision.cell_var, decision.offset, decision.column
        if cv is None:
            return [[("lb", x, off), ("ub", x, off)], [("ub", x, off - 1)], [("lb", x, off + 1)]]
        return [
            [("con", ((x, 1), (cv, -1)), off), ("con", ((x, -1), (cv, 1)), -off),
             ("truth", mi, col, cv, off, True)],
            [("con", ((x, 1), (cv, -1)), off - 1), ("truth", mi, col, cv, off, False)],
            [("con", ((x, -1), (cv, 1)), -off - 1), ("truth", mi, col, cv, off, False)],
        ]

    def apply(self, actions) -> bool:
        store = self.store
        for act in actions:
            kind = act[0]
            if kind == "lb":
                store.set_lb(act[1], act[2])
                if store.lb[act[1]] > store.ub[act[1]]:
                    return False
            elif kind == "ub":
                store.set_ub(act[1], act[2])
                if store.lb[act[1]] > store.ub[act[1]]:
                    return False
            elif kind == "con":
                self.add_constraint(act[1], act[2])
            elif kind == "truth":
                _, mi, col, cv, off, val = act
                self.members[mi].set_truth(col, cv, off, val)
        return True

    def _record(self, value):
        names = self.store.names
        assignment = {names[i]: value(i) for i in range(len(names))}
        self.incumbent = assignment
        if self.objective is not None:
            direction, coeffs, const = self.objective
            obj = const + sum(c * assignment[names[v]] for v, c in coeffs.items())
            self.incumbent_value = obj
            if direction == "maximize":
                cut = LinearConstraint(tuple((v, -c) for v, c in coeffs.items()), const - obj - 1)
            else:
                cut = LinearConstraint(tuple(coeffs.items()), obj - 1 - const)
            self.cons[0] = cut
        # the matching row of every active membership, for reporting
        self.witnesses = [(mi, ms.consistent_under(value)) for mi, ms in enumerate(self.members)
                          if ms.active]

    def run(self, optimize: bool = False) -> SolveResult:
        self._start = time.monotonic()
        self.witnesses = []
        stack = []  # (trail mark, remaining children)
        status = None
        try:
            while True:
                outcome = self.node()
                if outcome == "conflict":
                    self.stats.conflicts += 1
                elif isinstance(outcome, tuple):
                    self._record(outcome[1])
                    if not optimize:
                        status = "sat"
                        break
                else:
                    self.stats.branches += 1
                    stack.append([self.trail.mark(), outcome[1:]])
                    if self.apply(outcome[0]):
                        continue
                # backtrack to the next untried child
                while stack:
                    mark, rest = stack[-1]
                    self.trail.undo_to(mark)
                    if not rest:
                        stack.pop()
                        continue
                    child = rest.pop(0)
                    if self.apply(child):
                        break
                else:
                    break
        except ResourceLimit:
            status = "resource-limit"
        if status is None:
            if optimize:
                status = "optimal" if self.incumbent is not None else "infeasible"
            else:
                status = "unsat"
        result = SolveResult(status, stats=self.stats, log=self.events or [])
        if self.incumbent is not None and status != "unsat":
            result.assignment = dict(self.incumbent)
            result.model = {v: self.incumbent[v] for v in self.user_vars if v in self.incumbent}
            result.objective = self.incumbent_value
            result.witnesses = self.witnesses
        return result


class _ByIndex:
    def __init__(self, store: BoundsStore):
        self.store = store

    def get(self, v, default=None):
        return self.store.lb[v], self.store.ub[v]


def solve(p: DecomposedProblem, limits: Optional[Limits] = None, log: bool = False) -> SolveResult:
    """Decide a decomposed problem (any objective is ignored)."""
    return Engine(p, limits, log).run(optimize=False)


def optimize(p: DecomposedProblem, limits: Optional[Limits] = None, log: bool = False) -> SolveResult:
    if p.objective is None:
        raise ValueError("optimize needs an objective")
    return Engine(p, limits, log).run(optimize=True)


def arrangement(p: DecomposedProblem, assignment: Dict[str, int]):
    """Truth of every tracked equality atom of the active memberships."""
    out = []
    for m in p.memberships:
        if m.guard is not None and assignment[m.guard] < 1:
            continue
        for row in m.rows:
            for x, c in zip(m.witness, row):
                rhs = c.offset if c.var is None else assignment[c.var] + c.offset
                out.append((x, c, assignment[x] == rhs))
    return out

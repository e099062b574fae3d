"""Integer bounds with a backtrackable trail, and interval propagation over
linear constraints ``sum(a * x) <= b`` (optionally guarded by a 0/1 var)."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

INF = math.inf


class Trail:
    """Undo log shared by every piece of backtrackable search state."""

    def __init__(self):
        self.entries: list = []

    def mark(self) -> int:
        return len(self.entries)

    def record(self, owner, payload):
        self.entries.append((owner, payload))

    def undo_to(self, mark: int):
        entries = self.entries
        while len(entries) > mark:
            owner, payload = entries.pop()
            owner.undo(payload)


class BoundsStore:
    """Per-variable ``[lb, ub]`` with ``-inf``/``+inf`` for missing bounds."""

    def __init__(self, trail: Optional[Trail] = None):
        self.trail = trail if trail is not None else Trail()
        self.names: List[Hashable] = []
        self.index: Dict[Hashable, int] = {}
        self.lb: List = []
        self.ub: List = []

    def add(self, name, lo=None, hi=None) -> int:
        if name in self.index:
            i = self.index[name]
            if lo is not None:
                self.lb[i] = max(self.lb[i], lo)
            if hi is not None:
                self.ub[i] = min(self.ub[i], hi)
            return i
        i = len(self.names)
        self.names.append(name)
        self.index[name] = i
        self.lb.append(-INF if lo is None else lo)
        self.ub.append(INF if hi is None else hi)
        return i

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self.index

    def bounds(self, name) -> Tuple:
        i = self.index[name]
        return self.lb[i], self.ub[i]

    def set_lb(self, i: int, value) -> bool:
        """Raise the lower bound of variable ``i``; returns whether it changed."""
        if value <= self.lb[i]:
            return False
        self.trail.record(self, (i, self.lb[i], self.ub[i]))
        self.lb[i] = value
        return True

    def set_ub(self, i: int, value) -> bool:
        if value >= self.ub[i]:
            return False
        self.trail.record(self, (i, self.lb[i], self.ub[i]))
        self.ub[i] = value
        return True

    def undo(self, payload):
        i, lo, hi = payload
        self.lb[i] = lo
        self.ub[i] = hi

    def is_fixed(self, i: int) -> bool:
        return self.lb[i] == self.ub[i]

    def consistent(self) -> bool:
        return all(lo <= hi for lo, hi in zip(self.lb, self.ub))

    def snapshot(self) -> Tuple[tuple, tuple]:
        return tuple(self.lb), tuple(self.ub)


@dataclass(frozen=True)
class LinearConstraint:
    """``guard = 1 => sum(c * v for v, c in coeffs) <= bound``; no guard means always."""

    coeffs: Tuple[Tuple[Hashable, int], ...]
    bound: int
    guard: Optional[Hashable] = None

    def evaluate(self, env) -> bool:
        if self.guard is not None and env[self.guard] < 1:
            return True
        return sum(c * env[v] for v, c in self.coeffs) <= self.bound

    def variables(self):
        out = [v for v, _ in self.coeffs]
        if self.guard is not None:
            out.append(self.guard)
        return out


def make_constraint(coeffs, bound: int, guard=None) -> LinearConstraint:
    merged: Dict = {}
    for v, c in coeffs:
        merged[v] = merged.get(v, 0) + c
    return LinearConstraint(tuple((v, c) for v, c in merged.items() if c), bound, guard)


def ceil_div(p: int, q: int) -> int:
    return -((-p) // q)


def min_activity(c: LinearConstraint, lb, ub):
    total = 0
    for v, a in c.coeffs:
        total += a * lb[v] if a > 0 else a * ub[v]
    return total


def _tighten(c: LinearConstraint, store: BoundsStore, changed: list):
    """Tighten every variable of ``c`` from the extremes of the others.

    Returns False on conflict.  Changed variable indices are appended to
    ``changed``.
    """
    lb, ub = store.lb, store.ub
    finite = 0
    n_inf = 0
    inf_var = None
    for v, a in c.coeffs:
        m = a * lb[v] if a > 0 else a * ub[v]
        if m == -INF:
            n_inf += 1
            inf_var = v
        else:
            finite += m
    if n_inf == 0 and finite > c.bound:
        return False
    if n_inf >= 2:
        return True
    for v, a in c.coeffs:
        if n_inf == 1:
            if v != inf_var:
                continue
            rest = finite
        else:
            rest = finite - (a * lb[v] if a > 0 else a * ub[v])
        slack = c.bound - rest
        if a > 0:
            if store.set_ub(v, slack // a):
                changed.append(v)
        else:
            if store.set_lb(v, ceil_div(slack, a)):
                changed.append(v)
        if lb[v] > ub[v]:
            return False
    return True


def build_watch(constraints: Sequence[LinearConstraint]) -> Dict[Hashable, List[int]]:
    watch: Dict[Hashable, List[int]] = {}
    for ci, c in enumerate(constraints):
        for v in c.variables():
            watch.setdefault(v, []).append(ci)
    return watch


def propagate_bounds(store: BoundsStore, constraints: Sequence[LinearConstraint], *,
                     watch=None, max_steps: Optional[int] = None,
                     log: Optional[Callable] = None, initial=None) -> bool:
    """Interval propagation to fixpoint over constraints indexed by variable id.

    A guarded constraint takes part only when its guard is fixed to 1; one
    whose guard is still open but which the current bounds already violate
    forces its guard to 0.  Returns False on conflict.  ``max_steps`` caps the
    number of constraint visits so that slow integer descents (``x < y < x``
    over huge domains) stop early; the LP catches what is left.
    """
    if watch is None:
        watch = build_watch(constraints)
    n = len(constraints)
    if max_steps is None:
        max_steps = 50 * n + 1000
    queue = deque(range(n) if initial is None else initial)
    queued = [False] * n
    for ci in queue:
        queued[ci] = True
    lb, ub = store.lb, store.ub
    steps = 0
    while queue:
        ci = queue.popleft()
        queued[ci] = False
        steps += 1
        if steps > max_steps:
            break
        c = constraints[ci]
        g = c.guard
        changed: list = []
        if g is not None and lb[g] < 1:
            if ub[g] < 1:
                continue
            if _violated(c, lb, ub):
                store.set_ub(g, 0)
                changed.append(g)
                if lb[g] > ub[g]:
                    return False
        elif not _tighten(c, store, changed):
            if log is not None:
                for v in changed:
                    log(v, lb[v], ub[v])
            return False
        for v in changed:
            if log is not None:
                log(v, lb[v], ub[v])
            for cj in watch.get(v, ()):
                if cj != ci and not queued[cj]:
                    queued[cj] = True
                    queue.append(cj)
    return True


def _violated(c: LinearConstraint, lb, ub) -> bool:
    total = 0
    for v, a in c.coeffs:
        m = a * lb[v] if a > 0 else a * ub[v]
        if m == -INF:
            return False
        total += m
    return total > c.bound

"""Exact rational LP relaxation.

A bounded-variable simplex in the general form used by SMT arithmetic
solvers: every constraint row ``sum(a * x)`` gets a slack variable whose
bounds carry the right-hand side, nonbasic variables may sit anywhere inside
their bounds, and Bland's rule (smallest index first) picks pivots, which
rules out cycling.  All arithmetic is on :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Hashable, Iterable, Mapping, Optional, Tuple

from .bounds import INF, LinearConstraint

MAX_PIVOTS = 100_000


@dataclass
class LPResult:
    feasible: bool
    model: Dict[Hashable, Fraction]
    bound: Optional[object] = None  # objective optimum of the relaxation (may be inf)

    def __bool__(self):
        return self.feasible


class Tableau:
    def __init__(self, lo, hi):
        self.lo = list(lo)
        self.hi = list(hi)
        n = len(self.lo)
        self.val = [Fraction(_clamp0(self.lo[i], self.hi[i])) for i in range(n)]
        self.rows: Dict[int, Dict[int, Fraction]] = {}
        self.pivots = 0

    def add_row(self, coeffs: Dict[int, int], lo, hi) -> int:
        """New slack ``s = sum(coeffs)`` with ``lo <= s <= hi``; returns its id."""
        s = len(self.lo)
        self.lo.append(lo)
        self.hi.append(hi)
        row: Dict[int, Fraction] = {}
        for j, a in coeffs.items():
            if j in self.rows:
                for k, b in self.rows[j].items():
                    row[k] = row.get(k, 0) + a * b
            else:
                row[j] = row.get(j, 0) + a
        row = {k: Fraction(v) for k, v in row.items() if v}
        self.rows[s] = row
        self.val.append(sum((a * self.val[k] for k, a in row.items()), Fraction(0)))
        return s

    def _update(self, j: int, delta: Fraction):
        """Move nonbasic ``j`` by ``delta`` and keep basic values in sync."""
        if not delta:
            return
        self.val[j] += delta
        for b, row in self.rows.items():
            a = row.get(j)
            if a:
                self.val[b] += a * delta

    def _pivot(self, b: int, j: int):
        row = self.rows.pop(b)
        a = row.pop(j)
        inv = 1 / a
        new = {k: -c * inv for k, c in row.items()}
        new[b] = inv
        for r, other in self.rows.items():
            c = other.pop(j, None)
            if c:
                for k, d in new.items():
                    v = other.get(k, 0) + c * d
                    if v:
                        other[k] = v
                    else:
                        other.pop(k, None)
        self.rows[j] = new
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise RuntimeError("simplex pivot limit exceeded")

    def _pivot_and_update(self, b: int, j: int, target):
        a = self.rows[b][j]
        theta = (target - self.val[b]) / a
        self._update(j, theta)
        self._pivot(b, j)

    def check(self) -> bool:
        lo, hi, val = self.lo, self.hi, self.val
        while True:
            viol = None
            for b in self.rows:
                if (val[b] < lo[b] or val[b] > hi[b]) and (viol is None or b < viol):
                    viol = b
            if viol is None:
                return True
            row = self.rows[viol]
            increase = val[viol] < lo[viol]
            enter = None
            for j in sorted(row):
                a = row[j]
                if increase == (a > 0):
                    ok = val[j] < hi[j]
                else:
                    ok = val[j] > lo[j]
                if ok:
                    enter = j
                    break
            if enter is None:
                return False
            self._pivot_and_update(viol, enter, lo[viol] if increase else hi[viol])

    def maximize(self, obj: Mapping[int, int]):
        """Maximise ``sum(obj)`` from a feasible point; returns the optimum or INF."""
        lo, hi, val = self.lo, self.hi, self.val
        while True:
            d: Dict[int, Fraction] = {}
            for v, c in obj.items():
                if v in self.rows:
                    for k, a in self.rows[v].items():
                        d[k] = d.get(k, 0) + c * a
                else:
                    d[v] = d.get(v, 0) + c
            enter = None
            for j in sorted(d):
                dj = d[j]
                if (dj > 0 and val[j] < hi[j]) or (dj < 0 and val[j] > lo[j]):
                    enter = j
                    break
            if enter is None:
                return sum((c * val[v] for v, c in obj.items()), Fraction(0))
            direction = 1 if d[enter] > 0 else -1
            step = hi[enter] - val[enter] if direction > 0 else val[enter] - lo[enter]
            leave = None
            for b in sorted(self.rows):
                a = self.rows[b].get(enter)
                if not a:
                    continue
                rate = a * direction
                room = (hi[b] - val[b]) / rate if rate > 0 else (lo[b] - val[b]) / rate
                if room < step:
                    step = room
                    leave = b
            if step == INF:
                return INF
            if leave is None:
                self._update(enter, direction * step)
            else:
                a = self.rows[leave][enter]
                target = val[leave] + a * direction * step
                self._pivot_and_update(leave, enter, target)


def _clamp0(lo, hi):
    if lo > 0:
        return lo
    if hi < 0:
        return hi
    return 0


def _floor_div(num: int, den: int) -> int:
    return num // den


def lp_check(constraints: Iterable[LinearConstraint], bounds,
             objective: Optional[Tuple[str, Mapping[Hashable, int]]] = None, *,
             integer_rounding: bool = False) -> LPResult:
    """Exact LP relaxation of the active constraints under the given bounds.

    ``bounds`` is a BoundsStore or a mapping ``var -> (lo, hi)`` (None or inf
    for open ends).  ``objective`` is ``("maximize"|"minimize", coeffs)``; when
    given, ``bound`` is the relaxation optimum.  Guards are ignored: pass only
    active constraints.

    With ``integer_rounding`` every row is divided by the gcd of its
    coefficients and its right-hand side rounded down, which is valid only
    for integer variables but cuts off many fractional points.
    """
    exact = None if integer_rounding else Fraction
    constraints = list(constraints)
    names: Dict[Hashable, int] = {}
    order = []

    def idx(v):
        if v not in names:
            names[v] = len(order)
            order.append(v)
        return names[v]

    for c in constraints:
        for v, _ in c.coeffs:
            idx(v)
    if objective is not None:
        for v in objective[1]:
            idx(v)
    lo, hi = [], []
    for v in order:
        a, b = _lookup(bounds, v)
        lo.append(a)
        hi.append(b)

    # single-variable rows only tighten bounds; integer rounding is valid here
    rows: Dict[Tuple, list] = {}
    for c in constraints:
        if not c.coeffs:
            if c.bound < 0:
                return LPResult(False, {})
            continue
        if len(c.coeffs) == 1:
            v, a = c.coeffs[0]
            i = names[v]
            if a > 0:
                hi[i] = min(hi[i], c.bound // a if exact is None else exact(c.bound, a))
            else:
                lo[i] = max(lo[i], -((-c.bound) // a) if exact is None else exact(c.bound, a))
            continue
        items = sorted((names[v], a) for v, a in c.coeffs)
        g = math.gcd(*(abs(a) for _, a in items))
        sign = 1 if items[0][1] > 0 else -1
        key = tuple((i, sign * a // g) for i, a in items)
        rhs = c.bound // g if exact is None else exact(c.bound, g)
        entry = rows.setdefault(key, [-INF, INF])
        if sign > 0:
            entry[1] = min(entry[1], rhs)
        else:
            entry[0] = max(entry[0], -rhs)
    for i in range(len(order)):
        if lo[i] > hi[i]:
            return LPResult(False, {})
    tab = Tableau(lo, hi)
    for key, (rlo, rhi) in rows.items():
        if rlo > rhi:
            return LPResult(False, {})
        tab.add_row(dict(key), rlo, rhi)
    if not tab.check():
        return LPResult(False, {})
    bound = None
    if objective is not None:
        direction, coeffs = objective
        sign = 1 if direction == "maximize" else -1
        obj = {names[v]: sign * c for v, c in coeffs.items() if c}
        opt = tab.maximize(obj)
        bound = opt if sign > 0 else -opt
    model = {v: tab.val[i] for v, i in names.items()}
    return LPResult(True, model, bound)


def _lookup(bounds, v):
    if hasattr(bounds, "index"):
        i = bounds.index[v] if v in bounds.index else None
        if i is None:
            return -INF, INF
        return bounds.lb[i], bounds.ub[i]
    lo, hi = bounds.get(v, (None, None))
    return (-INF if lo is None else lo), (INF if hi is None else hi)


def branch_select_int(model: Mapping[Hashable, Fraction], integer=None):
    """First fractional variable (lowest index/name) as ``(var, floor)``, or None.

    The two children are ``var <= floor`` and ``var >= floor + 1``.
    """
    for v in sorted(model):
        if integer is not None and v not in integer:
            continue
        q = model[v]
        if q.denominator != 1:
            return v, math.floor(q)
    return None

"""Theory procedure for (conditional) membership constraints.

For a witness ``(x_1..x_k)`` and rows ``y_j`` a row is a *candidate* while
every column interval of the row meets the witness interval and none of its
equalities ``x_i = y_ji`` has been asserted false.  Propagation bounds each
``x_i`` by the hull of its column over the candidates, deduces the row's
equalities when a single candidate is left, and reports a conflict when none
is.  Candidate lists live on the shared trail so that backtracking restores
them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import Cell
from .decompose import MembershipConstraint
from .lia.bounds import INF, BoundsStore, Trail

NUMPY_THRESHOLD = 64
_I64 = np.iinfo(np.int64)


# --------------------------------------------------------------------------
# pure helpers over names


def cell_interval(c: Cell, bounds: Mapping) -> Tuple:
    if c.var is None:
        return c.offset, c.offset
    lo, hi = bounds.get(c.var, (-INF, INF))
    lo = -INF if lo is None else lo
    hi = INF if hi is None else hi
    return lo + c.offset, hi + c.offset


def match(witness_bounds: Sequence[Tuple], row: Sequence[Cell], bounds: Mapping) -> bool:
    """True iff every column interval of ``row`` meets the witness interval."""
    for (wlo, whi), c in zip(witness_bounds, row):
        clo, chi = cell_interval(c, bounds)
        if clo > whi or chi < wlo:
            return False
    return True


def check_consistent(m: MembershipConstraint, truth: Mapping[Tuple[str, Cell], bool],
                     guard_value: Optional[int] = None) -> bool:
    """Does some row have every equality ``x_i = cell`` true under ``truth``?

    ``truth`` maps ``(witness_var, cell)`` to the truth of that equality; a
    guard fixed to 0 disables the constraint.
    """
    if m.guard is not None and guard_value == 0:
        return True
    for row in m.rows:
        if all(truth[(x, c)] for x, c in zip(m.witness, row)):
            return True
    return False


def arrangement_from_values(m: MembershipConstraint, values: Mapping[str, int]
                            ) -> Dict[Tuple[str, Cell], bool]:
    """Truth of every tracked equality atom of ``m`` under an assignment."""
    out = {}
    for row in m.rows:
        for x, c in zip(m.witness, row):
            rhs = c.offset if c.var is None else values[c.var] + c.offset
            out[(x, c)] = values[x] == rhs
    return out


# --------------------------------------------------------------------------
# branching decisions


@dataclass(frozen=True)
class BoundSplit:
    """Children ``var <= value - 1`` and ``var >= value``."""

    var: int
    value: int


@dataclass(frozen=True)
class EqualitySplit:
    """Three children ``x < v + c``, ``x = v + c``, ``x > v + c`` (v None: constant)."""

    var: int
    cell_var: Optional[int]
    offset: int
    column: int


# --------------------------------------------------------------------------
# stateful procedure


class MembershipState:
    """Candidate set and equality-atom truths of one membership constraint."""

    def __init__(self, m: MembershipConstraint, store: BoundsStore, trail: Optional[Trail] = None,
                 cache: Optional[dict] = None):
        self.constraint = m
        self.store = store
        self.trail = trail if trail is not None else store.trail
        self.k = m.arity
        self.wx = [store.index[x] for x in m.witness]
        self.guard = None if m.guard is None else store.index[m.guard]
        # memberships created from one input table share its rows; index them once
        key = id(m.rows)
        if cache is not None and key in cache and cache[key][0] is m.rows:
            _, self.cells, self.symbolic_rows, self.vals, const_rows = cache[key]
        else:
            self.cells = [tuple((-1 if c.var is None else store.index[c.var], c.offset) for c in row)
                          for row in m.rows]
            self.symbolic_rows = [j for j, row in enumerate(self.cells) if any(v >= 0 for v, _ in row)]
            sym = set(self.symbolic_rows)
            const_rows = np.array([j for j in range(len(self.cells)) if j not in sym], dtype=np.int64)
            self.vals = np.array([[c.offset if c.var is None else 0 for c in row] for row in m.rows],
                                 dtype=object if _too_wide(m.rows) else np.int64)
            if cache is not None:
                cache[key] = (m.rows, self.cells, self.symbolic_rows, self.vals, const_rows)
        self.cand_const = const_rows
        self.cand_sym: List[int] = list(self.symbolic_rows)
        self.truth: Dict[Tuple[int, int, int], bool] = {}
        self.unique_done = False

    # trail --------------------------------------------------------------

    def undo(self, payload):
        kind = payload[0]
        if kind == "cand":
            self.cand_const, self.cand_sym = payload[1], payload[2]
        elif kind == "truth":
            del self.truth[payload[1]]
        elif kind == "unique":
            self.unique_done = False

    # queries ------------------------------------------------------------

    @property
    def active(self) -> bool:
        return self.guard is None or self.store.lb[self.guard] >= 1

    @property
    def disabled(self) -> bool:
        return self.guard is not None and self.store.ub[self.guard] < 1

    def candidates(self) -> List[int]:
        return sorted([int(j) for j in self.cand_const] + self.cand_sym)

    def n_candidates(self) -> int:
        return len(self.cand_const) + len(self.cand_sym)

    def row_cells(self, j: int) -> List[Cell]:
        return list(self.constraint.rows[j])

    def _interval(self, vi: int, off: int):
        if vi < 0:
            return off, off
        return self.store.lb[vi] + off, self.store.ub[vi] + off

    def atom_key(self, i: int, vi: int, off: int):
        return (i, vi, off)

    def atom_truth(self, i: int, vi: int, off: int) -> Optional[bool]:
        """Truth of ``x_i = cell`` if it is decided by assertions or bounds."""
        t = self.truth.get((i, vi, off))
        if t is not None:
            return t
        lb, ub = self.store.lb, self.store.ub
        x = self.wx[i]
        clo, chi = self._interval(vi, off)
        if clo > ub[x] or chi < lb[x]:
            return False
        if lb[x] == ub[x] and clo == chi == lb[x]:
            return True
        return None

    def row_matches(self, j: int) -> bool:
        lb, ub = self.store.lb, self.store.ub
        truth = self.truth
        for i, (vi, off) in enumerate(self.cells[j]):
            x = self.wx[i]
            if vi < 0:
                if off < lb[x] or off > ub[x]:
                    return False
            elif lb[vi] + off > ub[x] or ub[vi] + off < lb[x]:
                return False
            if truth and truth.get((i, vi, off)) is False:
                return False
        return True

    # operations ---------------------------------------------------------

    def filter(self) -> bool:
        """Drop rows that no longer match; returns whether anything changed."""
        new_const = self._filter_const()
        new_sym = [j for j in self.cand_sym if self.row_matches(j)]
        if len(new_const) == len(self.cand_const) and len(new_sym) == len(self.cand_sym):
            return False
        self.trail.record(self, ("cand", self.cand_const, self.cand_sym))
        self.cand_const, self.cand_sym = new_const, new_sym
        return True

    def _filter_const(self):
        cand = self.cand_const
        if len(cand) == 0:
            return cand
        const_false = any(vi < 0 and t is False for (_, vi, _), t in self.truth.items())
        if len(cand) < NUMPY_THRESHOLD or const_false or self.vals.dtype == object:
            keep = [j for j in cand.tolist() if self.row_matches(j)]
            return np.array(keep, dtype=np.int64)
        lb, ub = self.store.lb, self.store.ub
        mask = np.ones(len(cand), dtype=bool)
        sub = self.vals[cand]
        for i, x in enumerate(self.wx):
            lo, hi = lb[x], ub[x]
            if lo > _I64.max or hi < _I64.min:
                return cand[:0]
            if lo > _I64.min:
                mask &= sub[:, i] >= lo
            if hi < _I64.max:
                mask &= sub[:, i] <= hi
        if mask.all():
            return cand
        return cand[mask]

    def propagate(self):
        """Bound the witness by its candidates.

        Returns ``(ok, changed_vars, equalities)`` where ``equalities`` lists
        ``(x_var, cell_var, offset)`` deduced from a unique candidate with a
        symbolic cell (constant cells are fixed directly in the bounds).
        """
        changed: List[int] = []
        if not self.active:
            return True, changed, []
        self.filter()
        n = self.n_candidates()
        if n == 0:
            return False, changed, []
        store = self.store
        for i, x in enumerate(self.wx):
            lo, hi = INF, -INF
            if len(self.cand_const):
                col = self.vals[self.cand_const, i]
                lo, hi = int(col.min()), int(col.max())
            for j in self.cand_sym:
                clo, chi = self._interval(*self.cells[j][i])
                if clo < lo:
                    lo = clo
                if chi > hi:
                    hi = chi
            if lo != -INF and store.set_lb(x, lo):
                changed.append(x)
            if hi != INF and store.set_ub(x, hi):
                changed.append(x)
            if store.lb[x] > store.ub[x]:
                return False, changed, []
        equalities = []
        if n == 1 and not self.unique_done:
            self.trail.record(self, ("unique",))
            self.unique_done = True
            j = int(self.cand_const[0]) if len(self.cand_const) else self.cand_sym[0]
            for i, (vi, off) in enumerate(self.cells[j]):
                if vi >= 0:
                    equalities.append((self.wx[i], vi, off))
                    self.set_truth(i, vi, off, True)
        return True, changed, equalities

    def set_truth(self, i: int, vi: int, off: int, value: bool):
        key = (i, vi, off)
        if key in self.truth:
            return
        self.trail.record(self, ("truth", key))
        self.truth[key] = value

    def assert_equality(self, column: int, cell: Cell, value: bool) -> bool:
        """Record the truth of ``x_column = cell``; returns False when no candidate is left."""
        vi = -1 if cell.var is None else self.store.index[cell.var]
        self.set_truth(column, vi, cell.offset, value)
        self.filter()
        return self.n_candidates() > 0

    def consistent_under(self, value_of) -> Optional[int]:
        """Index of a candidate row equal to the witness under ``value_of``, else None."""
        xs = [value_of(x) for x in self.wx]
        for j in self.candidates():
            if all(xs[i] == (off if vi < 0 else value_of(vi) + off)
                   for i, (vi, off) in enumerate(self.cells[j])):
                return j
        return None

    def suggest_branch(self):
        """Data-driven branching decision, or None with fewer than two candidates.

        A median bound split is preferred when the best column has at least
        three distinct constants; otherwise an undecided equality against a
        symbolic cell is split; a two-valued bound split is the last resort.
        """
        if self.n_candidates() < 2:
            return None
        best_col, best_vals, best_distinct = None, None, 0
        for i in range(self.k):
            vals = [int(v) for v in self.vals[self.cand_const, i]] if len(self.cand_const) else []
            vals += [self.cells[j][i][1] for j in self.cand_sym if self.cells[j][i][0] < 0]
            distinct = len(set(vals))
            if distinct > best_distinct:
                best_col, best_vals, best_distinct = i, vals, distinct
        if best_distinct >= 3:
            return self._median_split(best_col, best_vals)
        for j in self.cand_sym:
            for i, (vi, off) in enumerate(self.cells[j]):
                if vi >= 0 and self.atom_truth(i, vi, off) is None:
                    return EqualitySplit(self.wx[i], vi, off, i)
        if best_distinct >= 2:
            return self._median_split(best_col, best_vals)
        return None

    def _median_split(self, col: int, vals: List[int]) -> BoundSplit:
        vals = sorted(vals)
        m = vals[len(vals) // 2]
        if m == vals[0]:
            m = min(v for v in vals if v > vals[0])
        return BoundSplit(self.wx[col], m)


def _too_wide(rows) -> bool:
    return any(c.var is None and not (_I64.min < c.offset < _I64.max) for row in rows for c in row)

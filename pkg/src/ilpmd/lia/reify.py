"""Polarity-based reification of NNF QFLIA formulas into guarded linear
constraints.

Only the implication ``indicator = 1 => subformula`` is generated, which is
enough because every subformula occurs positively after NNF.  A disjunction
``f1 or ... or fn`` under guard ``g`` becomes fresh indicators ``b_i`` with
``b_i = 1 => f_i`` plus the clause ``g <= sum(b_i)`` (``1 <= sum(b_i)`` at top
level).
"""

from __future__ import annotations

from typing import Callable, Iterable, List, Optional, Set, Tuple

from .. import qflia
from .bounds import LinearConstraint, make_constraint


def reify(f: qflia.QFormula, fresh: Callable[[], str], zero_one: Iterable[str] = ()
          ) -> Tuple[List[LinearConstraint], List[str]]:
    """Encode ``f`` (NNF) as linear constraints over variable names.

    ``zero_one`` names existing 0/1 variables: a disjunct that is exactly the
    atom ``v >= 1`` for such a ``v`` uses ``v`` itself as its indicator.
    Returns the constraints and the new indicator names (all bounded [0, 1]).
    """
    known: Set[str] = set(zero_one)
    out: List[LinearConstraint] = []
    indicators: List[str] = []

    def literal(a) -> Optional[str]:
        if isinstance(a, qflia.Atom) and a.bound == -1 and len(a.coeffs) == 1:
            v, c = a.coeffs[0]
            if c == -1 and v in known:
                return v
        return None

    stack = [(qflia.nnf(f), None)]
    while stack:
        node, g = stack.pop()
        if isinstance(node, qflia.BoolConst):
            if not node.value:
                if g is None:
                    out.append(LinearConstraint((), -1))
                else:
                    out.append(LinearConstraint(((g, 1),), 0))
        elif isinstance(node, qflia.Atom):
            out.append(LinearConstraint(node.coeffs, node.bound, g))
        elif isinstance(node, qflia.And):
            for a in reversed(node.args):
                stack.append((a, g))
        elif isinstance(node, qflia.Or):
            lits = []
            pending = []
            for a in node.args:
                lit = literal(a)
                if lit is None:
                    lit = fresh()
                    indicators.append(lit)
                    known.add(lit)
                    pending.append((a, lit))
                lits.append(lit)
            coeffs = [(b, -1) for b in lits]
            if g is None:
                out.append(make_constraint(coeffs, -1))
            else:
                out.append(make_constraint(coeffs + [(g, 1)], 0))
            for item in reversed(pending):
                stack.append(item)
        else:
            raise TypeError(f"unexpected node in NNF formula: {node!r}")
    return out, indicators

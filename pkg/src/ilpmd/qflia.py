"""Quantifier-free linear integer arithmetic formulas.

Atoms are normalised to ``sum(coef * var) <= bound`` with integer
coefficients, sorted by variable name.  ``And``/``Or`` are n-ary and the
smart constructors fold constants, so a formula without variables always
collapses to ``TRUE`` or ``FALSE``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Tuple, Union


class LinExpr:
    """Integer linear expression ``sum(coeffs[v] * v) + const``."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Mapping[str, int] = None, const: int = 0):
        self.coeffs: Dict[str, int] = {v: c for v, c in (coeffs or {}).items() if c}
        self.const = const

    @classmethod
    def var(cls, name: str, coef: int = 1) -> "LinExpr":
        return cls({name: coef})

    def __add__(self, other: "LinExpr") -> "LinExpr":
        out = dict(self.coeffs)
        for v, c in other.coeffs.items():
            out[v] = out.get(v, 0) + c
        return LinExpr(out, self.const + other.const)

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self + other.scale(-1)

    def scale(self, k: int) -> "LinExpr":
        return LinExpr({v: c * k for v, c in self.coeffs.items()}, self.const * k)

    def evaluate(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[v] for v, c in self.coeffs.items())

    def __eq__(self, other):
        return isinstance(other, LinExpr) and self.coeffs == other.coeffs and self.const == other.const

    def __repr__(self):
        return f"LinExpr({self.coeffs}, {self.const})"


@dataclass(frozen=True)
class BoolConst:
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class Atom:
    """``sum(c * v for v, c in coeffs) <= bound``."""

    coeffs: Tuple[Tuple[str, int], ...]
    bound: int

    def negate(self) -> "Atom":
        # integer-tight: not(a.x <= c)  <=>  -a.x <= -c - 1
        return Atom(tuple((v, -c) for v, c in self.coeffs), -self.bound - 1)

    def evaluate(self, env: Mapping[str, int]) -> bool:
        return sum(c * env[v] for v, c in self.coeffs) <= self.bound


@dataclass(frozen=True)
class And:
    args: Tuple["QFormula", ...]


@dataclass(frozen=True)
class Or:
    args: Tuple["QFormula", ...]


@dataclass(frozen=True)
class Not:
    arg: "QFormula"


QFormula = Union[BoolConst, Atom, And, Or, Not]


def le(lhs: LinExpr, rhs: LinExpr) -> QFormula:
    """The atom ``lhs <= rhs``, folded to a constant when variable-free."""
    diff = lhs - rhs
    if not diff.coeffs:
        return TRUE if diff.const <= 0 else FALSE
    return Atom(tuple(sorted(diff.coeffs.items())), -diff.const)


def eq(lhs: LinExpr, rhs: LinExpr) -> QFormula:
    return conj(le(lhs, rhs), le(rhs, lhs))


def conj(*args: QFormula) -> QFormula:
    return conj_all(args)


def disj(*args: QFormula) -> QFormula:
    return disj_all(args)


def conj_all(args: Iterable[QFormula]) -> QFormula:
    out = []
    for a in args:
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        if isinstance(a, And):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj_all(args: Iterable[QFormula]) -> QFormula:
    out = []
    for a in args:
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        if isinstance(a, Or):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def neg(f: QFormula) -> QFormula:
    if isinstance(f, BoolConst):
        return BoolConst(not f.value)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def nnf(f: QFormula, positive: bool = True) -> QFormula:
    """Negation normal form; negated atoms become integer-tight atoms."""
    if isinstance(f, BoolConst):
        return f if positive else BoolConst(not f.value)
    if isinstance(f, Atom):
        return f if positive else f.negate()
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    parts = [nnf(a, positive) for a in f.args]
    if isinstance(f, And) == positive:
        return conj_all(parts)
    return disj_all(parts)


def evaluate(f: QFormula, env: Mapping[str, int]) -> bool:
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Atom):
        return f.evaluate(env)
    if isinstance(f, Not):
        return not evaluate(f.arg, env)
    if isinstance(f, And):
        return all(evaluate(a, env) for a in f.args)
    return any(evaluate(a, env) for a in f.args)


def variables(f: QFormula, out: set = None) -> set:
    out = set() if out is None else out
    stack = [f]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Atom):
            out.update(v for v, _ in cur.coeffs)
        elif isinstance(cur, Not):
            stack.append(cur.arg)
        elif isinstance(cur, (And, Or)):
            stack.extend(cur.args)
    return out


def size(f: QFormula) -> int:
    """Number of nodes, counting each atom once."""
    n = 0
    stack = [f]
    while stack:
        cur = stack.pop()
        n += 1
        if isinstance(cur, Not):
            stack.append(cur.arg)
        elif isinstance(cur, (And, Or)):
            stack.extend(cur.args)
    return n


def contains_table_operators(f) -> bool:
    """Always False for a well-formed QFormula; handy in invariant tests."""
    stack = [f]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Not):
            stack.append(cur.arg)
        elif isinstance(cur, (And, Or)):
            stack.extend(cur.args)
        elif not isinstance(cur, (Atom, BoolConst)):
            return True
    return False

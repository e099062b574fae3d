"""Typed abstract syntax for the table logic, plus type checking, rank and
fragment detection.

Terms, tables and formulas are immutable dataclasses.  ``and`` and ``=`` are
not primitive: the helpers :func:`conj` and :func:`eq` build them out of
``Not``/``Or``/``Le`` so that every consumer only ever sees the core grammar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple, Union

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class DTypeError(Exception):
    """Raised when a term, table or formula is ill-typed."""


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class PairType:
    left: "DType"
    right: "DType"

    def __str__(self) -> str:
        return f"({self.left} * {self.right})"


DType = Union[IntType, PairType]
INT = IntType()


def width(t: DType) -> int:
    """Number of integer leaves in a (possibly nested) pair type."""
    if isinstance(t, IntType):
        return 1
    return width(t.left) + width(t.right)


def flat_schema(k: int) -> DType:
    """Schema of a flat k-column table, right-nested: int * (int * int)."""
    if k < 1:
        raise ValueError("a table needs at least one column")
    t: DType = INT
    for _ in range(k - 1):
        t = PairType(INT, t)
    return t


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Mul:
    """Scalar multiplication ``k * t``; the grammar only allows constant factors."""

    k: int
    term: "Term"


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Fst:
    term: "Term"


@dataclass(frozen=True)
class Snd:
    term: "Term"


Term = Union[Const, Var, Add, Mul, Pair, Fst, Snd]


@dataclass(frozen=True)
class Cell:
    """A table cell: constant ``offset`` when ``var`` is None, else ``var + offset``."""

    var: Optional[str]
    offset: int = 0

    @property
    def is_const(self) -> bool:
        return self.var is None

    def term(self) -> Term:
        if self.var is None:
            return Const(self.offset)
        if self.offset == 0:
            return Var(self.var)
        return Add(Var(self.var), Const(self.offset))

    def __str__(self) -> str:
        if self.var is None:
            return str(self.offset)
        if self.offset == 0:
            return f"?{self.var}"
        sign = "+" if self.offset > 0 else "-"
        return f"?{self.var}{sign}{abs(self.offset)}"


def cell_of_term(t: Term) -> Optional[Cell]:
    """Recognise the cell shapes ``c``, ``v``, ``v + c`` and ``c + v``."""
    if isinstance(t, Const):
        return Cell(None, t.value)
    if isinstance(t, Var):
        return Cell(t.name, 0)
    if isinstance(t, Add):
        if isinstance(t.left, Var) and isinstance(t.right, Const):
            return Cell(t.left.name, t.right.value)
        if isinstance(t.left, Const) and isinstance(t.right, Var):
            return Cell(t.right.name, t.left.value)
    return None


def row_term(items) -> Term:
    """Build the right-nested pair term for a flat row of cells or terms."""
    terms = [c.term() if isinstance(c, Cell) else c for c in items]
    if not terms:
        raise ValueError("empty row")
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = Pair(t, out)
    return out


def row_leaves(t: Term) -> list:
    """Flatten the pair structure of a row term into its integer leaves."""
    out = []
    stack = [t]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Pair):
            stack.append(cur.right)
            stack.append(cur.left)
        else:
            out.append(cur)
    return out


# --------------------------------------------------------------------------
# tables


class InputTable:
    """A literal, nonempty table of row terms.

    Equality is structural but hashing only looks at the name and size so
    that large tables can sit in sets and dict keys cheaply.
    """

    __slots__ = ("name", "rows", "_cells")

    def __init__(self, name: str, rows):
        rows = tuple(rows)
        if not rows:
            raise ValueError(f"table {name} has no rows")
        self.name = name
        self.rows: Tuple[Term, ...] = rows
        self._cells = None

    @classmethod
    def from_cells(cls, name: str, cell_rows) -> "InputTable":
        table = cls(name, [row_term(r) for r in cell_rows])
        table._cells = tuple(tuple(r) for r in cell_rows)
        return table

    @property
    def cells(self) -> Optional[Tuple[Tuple[Cell, ...], ...]]:
        """Rows as flat cell tuples, or None when some leaf is not a cell."""
        if self._cells is None:
            out = []
            for r in self.rows:
                leaves = [cell_of_term(t) for t in row_leaves(r)]
                if any(c is None for c in leaves):
                    return None
                out.append(tuple(leaves))
            self._cells = tuple(out)
        return self._cells

    def __eq__(self, other):
        if not isinstance(other, InputTable):
            return NotImplemented
        return self.name == other.name and self.rows == other.rows

    def __hash__(self):
        return hash((self.name, len(self.rows)))

    def __repr__(self):
        return f"InputTable({self.name!r}, {len(self.rows)} rows)"


@dataclass(frozen=True)
class Sel:
    binder: str
    cond: "Formula"
    table: "Table"


@dataclass(frozen=True)
class Prod:
    left: "Table"
    right: "Table"


@dataclass(frozen=True)
class Union_:
    left: "Table"
    right: "Table"


Table = Union[InputTable, Sel, Prod, Union_]


# --------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Le:
    left: Term
    right: Term


@dataclass(frozen=True)
class Exists:
    table: Table


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Formula = Union[Le, Exists, Not, Or]

TRUE: Formula = Le(Const(0), Const(0))
FALSE: Formula = Le(Const(1), Const(0))


def conj(a: Formula, b: Formula) -> Formula:
    return Not(Or(Not(a), Not(b)))


def conj_all(fs) -> Formula:
    fs = list(fs)
    if not fs:
        return TRUE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = conj(f, out)
    return out


def disj_all(fs) -> Formula:
    fs = list(fs)
    if not fs:
        return FALSE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = Or(f, out)
    return out


def eq(a: Term, b: Term) -> Formula:
    return conj(Le(a, b), Le(b, a))


def lt(a: Term, b: Term) -> Formula:
    return Le(Add(a, Const(1)), b)


def sub(a: Term, b: Term) -> Term:
    return Add(a, Mul(-1, b))


# --------------------------------------------------------------------------
# problems


@dataclass
class SourceProblem:
    """A parsed problem: declarations, named tables, one assertion, objective."""

    declarations: Dict[str, Tuple[Optional[int], Optional[int]]]
    tables: Dict[str, InputTable]
    assertion: Formula
    objective: Optional[Tuple[str, Term]] = None


# --------------------------------------------------------------------------
# type checking


def check_term(t: Term, env: Dict[str, DType]) -> DType:
    """Type of ``t`` where ``env`` maps variable names to their types."""
    if isinstance(t, Const):
        return INT
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise DTypeError(f"undeclared variable {t.name}") from None
    if isinstance(t, (Add, Mul)):
        parts = (t.left, t.right) if isinstance(t, Add) else (t.term,)
        for p in parts:
            if check_term(p, env) != INT:
                raise DTypeError("arithmetic on pair-typed term")
        return INT
    if isinstance(t, Pair):
        return PairType(check_term(t.left, env), check_term(t.right, env))
    if isinstance(t, (Fst, Snd)):
        inner = check_term(t.term, env)
        if not isinstance(inner, PairType):
            raise DTypeError("accessor on int")
        return inner.left if isinstance(t, Fst) else inner.right
    raise TypeError(f"not a term: {t!r}")


def check_table(d: Table, env: Dict[str, DType], schemas: dict) -> DType:
    if isinstance(d, InputTable):
        key = ("input", d.name, id(d))
        if key in schemas:
            return schemas[key]
        first = check_term(d.rows[0], env)
        for r in d.rows[1:]:
            if check_term(r, env) != first:
                raise DTypeError(f"input table {d.name} has heterogeneous row types")
        schemas[key] = first
        return first
    if isinstance(d, Sel):
        s = check_table(d.table, env, schemas)
        check_formula(d.cond, {**env, d.binder: s}, schemas)
        return s
    if isinstance(d, Prod):
        return PairType(check_table(d.left, env, schemas), check_table(d.right, env, schemas))
    if isinstance(d, Union_):
        a = check_table(d.left, env, schemas)
        b = check_table(d.right, env, schemas)
        if a != b:
            raise DTypeError(f"union of unequal schemas {a} and {b}")
        return a
    raise TypeError(f"not a table: {d!r}")


def check_formula(f: Formula, env: Dict[str, DType], schemas: dict) -> None:
    if isinstance(f, Le):
        if check_term(f.left, env) != INT or check_term(f.right, env) != INT:
            raise DTypeError("comparison of pair-typed terms")
    elif isinstance(f, Exists):
        check_table(f.table, env, schemas)
    elif isinstance(f, Not):
        check_formula(f.arg, env, schemas)
    elif isinstance(f, Or):
        check_formula(f.left, env, schemas)
        check_formula(f.right, env, schemas)
    else:
        raise TypeError(f"not a formula: {f!r}")


@dataclass
class TypedProblem:
    problem: SourceProblem
    schemas: Dict[str, DType]

    def schema(self, name: str) -> DType:
        return self.schemas[name]


def typecheck(problem: SourceProblem) -> TypedProblem:
    """Check a whole problem; returns it with the schema of each named table."""
    env: Dict[str, DType] = {v: INT for v in problem.declarations}
    cache: dict = {}
    named = {name: check_table(t, env, cache) for name, t in problem.tables.items()}
    check_formula(problem.assertion, env, cache)
    if problem.objective is not None:
        if check_term(problem.objective[1], env) != INT:
            raise DTypeError("objective must be an integer term")
    return TypedProblem(problem, named)


def schema_of(d: Table) -> DType:
    """Schema of a table; binders never affect schemas, so no env is needed."""
    if isinstance(d, InputTable):
        return _row_type(d.rows[0])
    if isinstance(d, Sel):
        return schema_of(d.table)
    if isinstance(d, Prod):
        return PairType(schema_of(d.left), schema_of(d.right))
    return schema_of(d.left)


def _row_type(t: Term) -> DType:
    if isinstance(t, Pair):
        return PairType(_row_type(t.left), _row_type(t.right))
    return INT


# --------------------------------------------------------------------------
# rank and the existential fragment


def rank(node) -> int:
    if isinstance(node, InputTable):
        return 1
    if isinstance(node, Sel):
        return rank(node.cond) + rank(node.table)
    if isinstance(node, Prod):
        return rank(node.left) + rank(node.right)
    if isinstance(node, (Union_, Or)):
        return max(rank(node.left), rank(node.right))
    if isinstance(node, Le):
        return 0
    if isinstance(node, Exists):
        return rank(node.table)
    if isinstance(node, Not):
        return rank(node.arg)
    raise TypeError(f"cannot rank {node!r}")


def exists_polarities(f: Formula, negations: int = 0) -> Iterator[int]:
    """Yield the number of enclosing negations for every Exists node."""
    stack = [(f, negations)]
    while stack:
        node, n = stack.pop()
        if isinstance(node, Exists):
            yield n
            stack.append((node.table, n))
        elif isinstance(node, Not):
            stack.append((node.arg, n + 1))
        elif isinstance(node, Or):
            stack.append((node.left, n))
            stack.append((node.right, n))
        elif isinstance(node, Sel):
            stack.append((node.cond, n))
            stack.append((node.table, n))
        elif isinstance(node, (Prod, Union_)):
            stack.append((node.left, n))
            stack.append((node.right, n))


def is_existential(f: Formula) -> bool:
    return all(n % 2 == 0 for n in exists_polarities(f))


def term_vars(t: Term, out: Optional[set] = None) -> set:
    out = set() if out is None else out
    stack = [t]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Var):
            out.add(cur.name)
        elif isinstance(cur, (Add, Pair)):
            stack.append(cur.left)
            stack.append(cur.right)
        elif isinstance(cur, (Mul, Fst, Snd)):
            stack.append(cur.term)
    return out

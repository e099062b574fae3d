"""S-expression surface syntax and CSV ingestion.

A problem file is a sequence of top-level forms::

    (declare-int x)            ; unbounded
    (declare-int y 0 10)
    (table T ((1 2) (?y 4)))   ; inline rows, ?v / ?v+c / ?v-c are symbolic
    (table S csv "s.csv")      ; relative to the problem file
    (assert (exists (sel r (= (fst r) x) T)))
    (maximize (+ x y))

Several ``assert`` forms are conjoined.  Derived forms (``and``, ``=``,
``>=``, ``<``, ``>``, ``-``, ``true``, ``false``) are desugared while
parsing, so the AST only ever contains the core constructors.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass
from typing import List, Optional

from .core import (
    FALSE, INT64_MAX, INT64_MIN, TRUE, Add, Cell, Const, Exists, Fst, InputTable, Le, Mul,
    Not, Or, Pair, Prod, Sel, Snd, SourceProblem, Union_, Var, conj_all, disj_all, eq,
    lt, sub,
)


class ParseError(Exception):
    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


# --------------------------------------------------------------------------
# reader


@dataclass
class Atom:
    text: str
    line: int
    col: int
    quoted: bool = False


@dataclass
class SList:
    items: list
    line: int
    col: int


_TOKEN = re.compile(r'\s+|;[^\n]*|\(|\)|"(?:[^"\\]|\\.)*"|[^\s()";]+')
IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_.']*\Z")
INTEGER = re.compile(r"-?\d+\Z")
CELL = re.compile(r"\?([A-Za-z][A-Za-z0-9_.']*)(?:([+-])(\d+))?\Z")


def read_sexprs(text: str) -> List:
    """Read all top-level s-expressions, keeping 1-based line/column positions."""
    stack: List[SList] = []
    top: list = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError("unterminated string", line, pos - line_start + 1)
        tok = m.group(0)
        col = pos - line_start + 1
        if tok == "(":
            stack.append(SList([], line, col))
        elif tok == ")":
            if not stack:
                raise ParseError("unexpected ')'", line, col)
            done = stack.pop()
            (stack[-1].items if stack else top).append(done)
        elif not tok[0].isspace() and tok[0] != ";":
            if tok[0] == '"':
                atom = Atom(bytes(tok[1:-1], "utf-8").decode("unicode_escape"), line, col, True)
            else:
                atom = Atom(tok, line, col)
            (stack[-1].items if stack else top).append(atom)
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    if stack:
        raise ParseError("unbalanced '(' : unexpected end of input", line, pos - line_start + 1)
    return top


def _pos(x):
    return x.line, x.col


def parse_int(tok: Atom) -> int:
    if tok.quoted or not INTEGER.match(tok.text):
        raise ParseError(f"expected integer, got {tok.text!r}", *_pos(tok))
    value = int(tok.text)
    if not INT64_MIN <= value <= INT64_MAX:
        raise ParseError(f"integer literal {tok.text} out of 64-bit range", *_pos(tok))
    return value


def parse_cell(text: str, line=None, col=None) -> Cell:
    if INTEGER.match(text):
        value = int(text)
        if not INT64_MIN <= value <= INT64_MAX:
            raise ParseError(f"integer literal {text} out of 64-bit range", line, col)
        return Cell(None, value)
    m = CELL.match(text)
    if m is None:
        raise ParseError(f"unparsable cell {text!r}", line, col)
    name, sign, digits = m.groups()
    offset = 0 if sign is None else int(digits) * (1 if sign == "+" else -1)
    if not INT64_MIN <= offset <= INT64_MAX:
        raise ParseError(f"cell offset {offset} out of 64-bit range", line, col)
    return Cell(name, offset)


# --------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, base_dir: str):
        self.base_dir = base_dir
        self.decls: dict = {}
        self.tables: dict = {}

    def head(self, form) -> str:
        if not isinstance(form, SList) or not form.items or not isinstance(form.items[0], Atom):
            raise ParseError("expected a (keyword ...) form", *_pos(form))
        return form.items[0].text

    def arity(self, form: SList, *counts):
        if len(form.items) - 1 not in counts:
            want = " or ".join(str(c) for c in counts)
            raise ParseError(f"{form.items[0].text} expects {want} arguments", *_pos(form))

    def ident(self, tok) -> str:
        if not isinstance(tok, Atom) or tok.quoted or not IDENT.match(tok.text):
            raise ParseError("expected identifier", *_pos(tok))
        return tok.text

    # declarations ----------------------------------------------------------

    def declaration(self, form: SList):
        kind = self.head(form)
        if kind == "declare-int":
            self.arity(form, 1, 3)
            name = self.ident(form.items[1])
            if name in self.decls:
                raise ParseError(f"duplicate declaration of {name}", *_pos(form.items[1]))
            lo = hi = None
            if len(form.items) == 4:
                lo = self.bound(form.items[2])
                hi = self.bound(form.items[3])
            self.decls[name] = (lo, hi)
        elif kind == "table":
            name = self.ident(form.items[1]) if len(form.items) > 1 else None
            if name is None:
                raise ParseError("table needs a name", *_pos(form))
            if name in self.tables:
                raise ParseError(f"duplicate table {name}", *_pos(form.items[1]))
            if len(form.items) == 4 and isinstance(form.items[2], Atom) and form.items[2].text == "csv":
                src = form.items[3]
                if not isinstance(src, Atom) or not src.quoted:
                    raise ParseError("csv table expects a quoted path", *_pos(src))
                path = src.text if os.path.isabs(src.text) else os.path.join(self.base_dir, src.text)
                try:
                    self.tables[name] = ingest_csv(path, name)
                except OSError as e:
                    raise ParseError(f"cannot read {src.text}: {e.strerror}", *_pos(src)) from None
            elif len(form.items) == 3 and isinstance(form.items[2], SList):
                self.tables[name] = self.inline_table(name, form.items[2])
            else:
                raise ParseError("malformed table form", *_pos(form))

    def bound(self, tok) -> Optional[int]:
        if isinstance(tok, Atom) and tok.text in ("*", "inf", "-inf"):
            return None
        return parse_int(tok)

    def inline_table(self, name: str, rows: SList) -> InputTable:
        if not rows.items:
            raise ParseError(f"table {name} has no rows", *_pos(rows))
        cell_rows = []
        for row in rows.items:
            if not isinstance(row, SList) or not row.items:
                raise ParseError("table row must be a nonempty list", *_pos(row))
            cells = []
            for c in row.items:
                if not isinstance(c, Atom) or c.quoted:
                    raise ParseError("table cells must be atoms", *_pos(c))
                cells.append(parse_cell(c.text, *_pos(c)))
            if cell_rows and len(cells) != len(cell_rows[0]):
                raise ParseError(f"ragged row in table {name}", *_pos(row))
            cell_rows.append(cells)
        return InputTable.from_cells(name, cell_rows)

    # formulas ---------------------------------------------------------------

    def formula(self, x, scope: frozenset):
        if isinstance(x, Atom):
            if x.text == "true":
                return TRUE
            if x.text == "false":
                return FALSE
            raise ParseError(f"expected formula, got {x.text!r}", *_pos(x))
        kind = self.head(x)
        args = x.items[1:]
        if kind in ("<=", ">=", "<", ">", "="):
            self.arity(x, 2)
            a, b = (self.term(t, scope) for t in args)
            if kind == "<=":
                return Le(a, b)
            if kind == ">=":
                return Le(b, a)
            if kind == "<":
                return lt(a, b)
            if kind == ">":
                return lt(b, a)
            return eq(a, b)
        if kind == "not":
            self.arity(x, 1)
            return Not(self.formula(args[0], scope))
        if kind in ("or", "and"):
            if len(args) < 2:
                raise ParseError(f"{kind} expects at least 2 arguments", *_pos(x))
            parts = [self.formula(a, scope) for a in args]
            return disj_all(parts) if kind == "or" else conj_all(parts)
        if kind == "exists":
            self.arity(x, 1)
            return Exists(self.table(args[0], scope))
        raise ParseError(f"unknown formula form {kind!r}", *_pos(x))

    def table(self, x, scope: frozenset):
        if isinstance(x, Atom):
            name = self.ident(x)
            if name not in self.tables:
                raise ParseError(f"unknown table {name}", *_pos(x))
            return self.tables[name]
        kind = self.head(x)
        args = x.items[1:]
        if kind == "sel":
            self.arity(x, 3)
            binder = self.ident(args[0])
            cond = self.formula(args[1], scope | {binder})
            return Sel(binder, cond, self.table(args[2], scope))
        if kind in ("prod", "union"):
            self.arity(x, 2)
            left, right = self.table(args[0], scope), self.table(args[1], scope)
            return Prod(left, right) if kind == "prod" else Union_(left, right)
        raise ParseError(f"unknown table form {kind!r}", *_pos(x))

    def term(self, x, scope: frozenset):
        if isinstance(x, Atom):
            if INTEGER.match(x.text) and not x.quoted:
                return Const(parse_int(x))
            name = self.ident(x)
            if name not in scope and name not in self.decls:
                raise ParseError(f"undeclared identifier {name}", *_pos(x))
            return Var(name)
        kind = self.head(x)
        args = x.items[1:]
        if kind == "+":
            if len(args) < 2:
                raise ParseError("+ expects at least 2 arguments", *_pos(x))
            out = self.term(args[0], scope)
            for a in args[1:]:
                out = Add(out, self.term(a, scope))
            return out
        if kind == "-":
            self.arity(x, 1, 2)
            if len(args) == 1:
                return Mul(-1, self.term(args[0], scope))
            return sub(self.term(args[0], scope), self.term(args[1], scope))
        if kind == "*":
            self.arity(x, 2)
            k = args[0]
            if not isinstance(k, Atom) or not INTEGER.match(k.text):
                raise ParseError("scalar multiplication needs a constant factor", *_pos(k))
            return Mul(parse_int(k), self.term(args[1], scope))
        if kind == "pair":
            self.arity(x, 2)
            return Pair(self.term(args[0], scope), self.term(args[1], scope))
        if kind in ("fst", "snd"):
            self.arity(x, 1)
            inner = self.term(args[0], scope)
            return Fst(inner) if kind == "fst" else Snd(inner)
        raise ParseError(f"unknown term form {kind!r}", *_pos(x))


def parse(text: str, base_dir: str = ".") -> SourceProblem:
    """Parse problem text into a :class:`SourceProblem`."""
    forms = read_sexprs(text)
    p = _Parser(base_dir)
    rest = []
    for form in forms:
        if p.head(form) in ("declare-int", "table"):
            p.declaration(form)
        else:
            rest.append(form)
    for name, table in p.tables.items():
        for row in table.cells or ():
            for cell in row:
                if cell.var is not None and cell.var not in p.decls:
                    raise ParseError(f"table {name} references undeclared variable {cell.var}")
    asserts = []
    objective = None
    for form in rest:
        kind = p.head(form)
        if kind == "assert":
            p.arity(form, 1)
            asserts.append(p.formula(form.items[1], frozenset()))
        elif kind in ("minimize", "maximize"):
            p.arity(form, 1)
            if objective is not None:
                raise ParseError("duplicate objective", *_pos(form))
            objective = (kind, p.term(form.items[1], frozenset()))
        else:
            raise ParseError(f"unknown top-level form {kind!r}", *_pos(form))
    return SourceProblem(dict(p.decls), dict(p.tables), conj_all(asserts), objective)


def parse_formula(text: str, declarations=(), tables=None):
    """Parse a single formula against the given declarations and tables."""
    forms = read_sexprs(text)
    if len(forms) != 1:
        raise ParseError("expected exactly one formula")
    p = _Parser(".")
    p.decls = {d: (None, None) for d in declarations}
    p.tables = dict(tables or {})
    return p.formula(forms[0], frozenset())


def load(path: str) -> SourceProblem:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse(text, os.path.dirname(os.path.abspath(path)))


# --------------------------------------------------------------------------
# CSV


def ingest_csv(path: str, name: str) -> InputTable:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if record[0].lstrip().startswith("#"):
                continue
            cells = [parse_cell(tok.strip(), lineno, i + 1) for i, tok in enumerate(record)]
            if rows and len(cells) != len(rows[0]):
                raise ParseError(
                    f"ragged row in {os.path.basename(path)}: {len(cells)} cells, expected {len(rows[0])}",
                    lineno, 1)
            rows.append(cells)
    if not rows:
        raise ParseError(f"table {name}: file {os.path.basename(path)} has no rows")
    return InputTable.from_cells(name, rows)


# --------------------------------------------------------------------------
# printer


def pretty_term(t) -> str:
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Add):
        return f"(+ {pretty_term(t.left)} {pretty_term(t.right)})"
    if isinstance(t, Mul):
        return f"(* {t.k} {pretty_term(t.term)})"
    if isinstance(t, Pair):
        return f"(pair {pretty_term(t.left)} {pretty_term(t.right)})"
    if isinstance(t, Fst):
        return f"(fst {pretty_term(t.term)})"
    if isinstance(t, Snd):
        return f"(snd {pretty_term(t.term)})"
    raise TypeError(t)


def pretty_table(d) -> str:
    if isinstance(d, InputTable):
        return d.name
    if isinstance(d, Sel):
        return f"(sel {d.binder} {pretty_formula(d.cond)} {pretty_table(d.table)})"
    if isinstance(d, Prod):
        return f"(prod {pretty_table(d.left)} {pretty_table(d.right)})"
    return f"(union {pretty_table(d.left)} {pretty_table(d.right)})"


def pretty_formula(f) -> str:
    if isinstance(f, Le):
        return f"(<= {pretty_term(f.left)} {pretty_term(f.right)})"
    if isinstance(f, Exists):
        return f"(exists {pretty_table(f.table)})"
    if isinstance(f, Not):
        return f"(not {pretty_formula(f.arg)})"
    if isinstance(f, Or):
        return f"(or {pretty_formula(f.left)} {pretty_formula(f.right)})"
    raise TypeError(f)


def pretty(problem: SourceProblem) -> str:
    lines = []
    for name, (lo, hi) in problem.declarations.items():
        if lo is None and hi is None:
            lines.append(f"(declare-int {name})")
        else:
            lo_s = "*" if lo is None else str(lo)
            hi_s = "*" if hi is None else str(hi)
            lines.append(f"(declare-int {name} {lo_s} {hi_s})")
    for name, table in problem.tables.items():
        cells = table.cells
        if cells is None:
            raise ValueError(f"table {name} has non-cell rows and cannot be printed inline")
        body = " ".join("(" + " ".join(str(c) for c in row) + ")" for row in cells)
        lines.append(f"(table {name} ({body}))")
    lines.append(f"(assert {pretty_formula(problem.assertion)})")
    if problem.objective is not None:
        lines.append(f"({problem.objective[0]} {pretty_term(problem.objective[1])})")
    return "\n".join(lines) + "\n"

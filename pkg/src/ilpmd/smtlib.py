"""SMT-LIB 2 output for reduced QFLIA formulas, plus a small reader used to
check that emitted scripts are well formed.

Formulas are written out in full (no ``let``).  Pairs of atoms
``a <= b`` and ``-a <= -b`` that sit next to each other in a conjunction are
written as one ``=``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from . import qflia

_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*\Z")


@dataclass
class SmtScript:
    lines: List[str] = field(default_factory=list)

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    def write(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text)


def symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"cannot quote identifier {name!r}")
    return f"|{name}|"


_RESERVED = {"and", "or", "not", "assert", "let", "true", "false", "+", "-", "*", "<=", "="}


def literal(k: int) -> str:
    return str(k) if k >= 0 else f"(- {-k})"


def _sum(terms: List[Tuple[int, str]], const: int) -> str:
    parts = []
    for k, v in terms:
        parts.append(symbol(v) if k == 1 else f"(* {literal(k)} {symbol(v)})")
    if const or not parts:
        parts.append(literal(const))
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _sides(coeffs, bound):
    lhs = [(a, v) for v, a in coeffs if a > 0]
    rhs = [(-a, v) for v, a in coeffs if a < 0]
    if bound >= 0:
        return _sum(lhs, 0), _sum(rhs, bound)
    return _sum(lhs, -bound), _sum(rhs, 0)


def atom_text(a: qflia.Atom) -> str:
    lhs, rhs = _sides(a.coeffs, a.bound)
    return f"(<= {lhs} {rhs})"


def _is_mirror(a, b) -> bool:
    return (isinstance(a, qflia.Atom) and isinstance(b, qflia.Atom) and b.bound == -a.bound
            and b.coeffs == tuple((v, -c) for v, c in a.coeffs))


def formula_text(f: qflia.QFormula) -> str:
    if isinstance(f, qflia.BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, qflia.Atom):
        return atom_text(f)
    if isinstance(f, qflia.Not):
        return f"(not {formula_text(f.arg)})"
    if isinstance(f, qflia.And):
        parts = []
        args = f.args
        i = 0
        while i < len(args):
            if i + 1 < len(args) and _is_mirror(args[i], args[i + 1]):
                lhs, rhs = _sides(args[i].coeffs, args[i].bound)
                parts.append(f"(= {lhs} {rhs})")
                i += 2
            else:
                parts.append(formula_text(args[i]))
                i += 1
        return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"
    if isinstance(f, qflia.Or):
        return "(or " + " ".join(formula_text(a) for a in f.args) + ")"
    raise TypeError(f"not a QFLIA formula: {f!r}")


def emit_smtlib(f: qflia.QFormula, variables: Mapping[str, Tuple[Optional[int], Optional[int]]],
                get_model: bool = True) -> SmtScript:
    """Script declaring every variable of ``variables`` and ``f`` as Int."""
    names = sorted(set(variables) | qflia.variables(f))
    out = SmtScript(["(set-logic QF_LIA)"])
    for v in names:
        out.lines.append(f"(declare-const {symbol(v)} Int)")
    for v in names:
        lo, hi = variables.get(v, (None, None))
        s = symbol(v)
        if lo is not None and hi is not None:
            out.lines.append(f"(assert (and (<= {literal(lo)} {s}) (<= {s} {literal(hi)})))")
        elif lo is not None:
            out.lines.append(f"(assert (<= {literal(lo)} {s}))")
        elif hi is not None:
            out.lines.append(f"(assert (<= {s} {literal(hi)}))")
    if f != qflia.TRUE:
        out.lines.append(f"(assert {formula_text(f)})")
    out.lines.append("(check-sat)")
    if get_model:
        out.lines.append("(get-model)")
    return out


# --------------------------------------------------------------------------
# reader


class SmtSyntaxError(ValueError):
    pass


_TOK = re.compile(r"\s+|;[^\n]*|\(|\)|\|[^|]*\||[^\s()|;]+")


def _sexprs(text: str):
    stack: List[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m:
            raise SmtSyntaxError(f"bad character at offset {pos}")
        tok = m.group()
        pos = m.end()
        if tok[0].isspace() or tok[0] == ";":
            continue
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SmtSyntaxError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok[1:-1] if tok[0] == "|" else tok)
    if len(stack) != 1:
        raise SmtSyntaxError("unbalanced '('")
    return stack[0]


@dataclass
class ParsedScript:
    logic: str
    declarations: List[str]
    assertions: List[qflia.QFormula]
    check_sat: bool
    get_model: bool

    def formula(self) -> qflia.QFormula:
        return qflia.conj_all(self.assertions)


def read_smtlib(text: str) -> ParsedScript:
    """Parse the subset of SMT-LIB 2 this module emits, checking sorts and scoping."""
    cmds = _sexprs(text)
    if not cmds or cmds[0][:1] != ["set-logic"]:
        raise SmtSyntaxError("script must start with set-logic")
    logic = cmds[0][1]
    declared: Dict[str, bool] = {}
    decls, asserts = [], []
    check = model = False
    for cmd in cmds[1:]:
        if not isinstance(cmd, list) or not cmd:
            raise SmtSyntaxError(f"bad command {cmd!r}")
        head = cmd[0]
        if check and head != "get-model":
            raise SmtSyntaxError("commands after check-sat")
        if head == "declare-const":
            if len(cmd) != 3 or cmd[2] != "Int":
                raise SmtSyntaxError(f"bad declaration {cmd!r}")
            if cmd[1] in declared:
                raise SmtSyntaxError(f"duplicate declaration of {cmd[1]}")
            declared[cmd[1]] = True
            decls.append(cmd[1])
        elif head == "assert":
            if len(cmd) != 2:
                raise SmtSyntaxError("assert takes one term")
            asserts.append(_bool(cmd[1], declared))
        elif head == "check-sat":
            check = True
        elif head == "get-model":
            if not check:
                raise SmtSyntaxError("get-model before check-sat")
            model = True
        else:
            raise SmtSyntaxError(f"unsupported command {head}")
    return ParsedScript(logic, decls, asserts, check, model)


def _bool(e, declared) -> qflia.QFormula:
    if e == "true":
        return qflia.TRUE
    if e == "false":
        return qflia.FALSE
    if not isinstance(e, list) or not e:
        raise SmtSyntaxError(f"expected a Boolean term, got {e!r}")
    head, args = e[0], e[1:]
    if head == "not" and len(args) == 1:
        return qflia.neg(_bool(args[0], declared))
    if head == "and" and args:
        return qflia.conj_all(_bool(a, declared) for a in args)
    if head == "or" and args:
        return qflia.disj_all(_bool(a, declared) for a in args)
    if head in ("<=", "=") and len(args) == 2:
        lhs, rhs = _int(args[0], declared), _int(args[1], declared)
        return qflia.le(lhs, rhs) if head == "<=" else qflia.eq(lhs, rhs)
    raise SmtSyntaxError(f"unsupported Boolean term {e!r}")


def _int(e, declared) -> qflia.LinExpr:
    if isinstance(e, str):
        if re.fullmatch(r"\d+", e):
            return qflia.LinExpr(const=int(e))
        if e not in declared:
            raise SmtSyntaxError(f"undeclared symbol {e}")
        return qflia.LinExpr.var(e)
    if not e:
        raise SmtSyntaxError("empty term")
    head, args = e[0], e[1:]
    if head == "+" and len(args) >= 2:
        out = qflia.LinExpr()
        for a in args:
            out = out + _int(a, declared)
        return out
    if head == "-" and len(args) == 1:
        return _int(args[0], declared).scale(-1)
    if head == "*" and len(args) == 2:
        k = _int(args[0], declared)
        if k.coeffs:
            raise SmtSyntaxError("non-linear multiplication")
        return _int(args[1], declared).scale(k.const)
    raise SmtSyntaxError(f"unsupported integer term {e!r}")

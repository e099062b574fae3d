import os

import pytest
from hypothesis import given, settings, strategies as st

from ilpmd.core import (INT, Cell, Const, DTypeError, Exists, Fst, InputTable, Le, Not, Or, Pair,
                        PairType, Prod, Sel, Snd, SourceProblem, Union_, Var, eq, is_existential,
                        rank, schema_of, typecheck)
from ilpmd.frontend import load

from helpers import random_existential

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "samples")
T = InputTable.from_cells("T", [[Cell(None, 1), Cell(None, 2)], [Cell("x", 0), Cell(None, 4)]])
B = InputTable("B", [Const(0), Const(1)])


def test_rank_input_table():
    assert rank(T) == 1


def test_rank_product_sums():
    assert rank(Prod(T, T)) == 2
    assert rank(Prod(T, Prod(T, T))) == 3


def test_rank_atom():
    assert rank(Le(Var("x"), Const(3))) == 0


def test_rank_selection_adds_condition():
    inner = Exists(Sel("s", eq(Fst(Var("s")), Fst(Var("r"))), T))
    assert rank(Sel("r", inner, T)) == 2
    assert rank(Sel("r", eq(Fst(Var("r")), Const(1)), T)) == 1


def test_rank_distinct_sample():
    p = load(os.path.join(SAMPLES, "distinct.dz"))
    assert rank(p.assertion) == 2
    assert not is_existential(p.assertion)


def test_rank_sample_doubling():
    p = load(os.path.join(SAMPLES, "doubling.dz"))
    assert rank(p.assertion) == 1
    assert is_existential(p.assertion)


def test_existential_polarity():
    e = Exists(T)
    assert is_existential(e)
    assert not is_existential(Not(e))
    assert is_existential(Not(Not(e)))
    assert not is_existential(Or(Le(Var("x"), Const(0)), Not(e)))
    # nested under a negated selection condition
    assert not is_existential(Exists(Sel("r", Not(Exists(B)), T)))
    assert is_existential(Le(Var("x"), Const(0)))


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_rank_max_rules(seed):
    f = random_existential(seed).assertion
    assert rank(Or(f, f)) == rank(f)
    assert rank(Not(f)) == rank(f)
    e = f.table if isinstance(f, Exists) else None
    if e is not None:
        assert rank(Union_(e, e)) == rank(e)


def test_schema_of_product():
    assert schema_of(Prod(T, B)) == PairType(PairType(INT, INT), INT)
    assert schema_of(B) == INT


def _problem(f, tables=(), decls=None):
    return SourceProblem(decls or {"x": (None, None)}, {t.name: t for t in tables}, f)


def test_typecheck_accepts_accessors():
    f = Exists(Sel("r", Le(Fst(Var("r")), Snd(Var("r"))), T))
    typecheck(_problem(f, [T]))


def test_typecheck_rejects_accessor_on_int():
    with pytest.raises(DTypeError):
        typecheck(_problem(Exists(Sel("r", Le(Fst(Var("r")), Const(0)), B)), [B]))


def test_typecheck_rejects_pair_in_comparison():
    with pytest.raises(DTypeError):
        typecheck(_problem(Exists(Sel("r", Le(Var("r"), Const(0)), T)), [T]))


def test_typecheck_rejects_union_schema_mismatch():
    with pytest.raises(DTypeError):
        typecheck(_problem(Exists(Union_(T, B)), [T, B]))


def test_typecheck_rejects_unbound_variable():
    with pytest.raises(DTypeError):
        typecheck(_problem(Le(Var("zz"), Const(0))))


def test_binder_scope_excludes_table():
    # r is bound in the condition only, never in the table it filters
    inner = InputTable("I", [Var("r")])
    with pytest.raises(DTypeError):
        typecheck(_problem(Exists(Sel("r", Le(Var("r"), Const(0)), inner)), [inner]))


def test_pair_rows_are_int_leaves():
    t = InputTable("P", [Pair(Const(1), Pair(Const(2), Const(3)))])
    assert schema_of(t) == PairType(INT, PairType(INT, INT))
    assert t.cells == ((Cell(None, 1), Cell(None, 2), Cell(None, 3)),)

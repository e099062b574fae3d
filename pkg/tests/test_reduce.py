import itertools
import random

import pytest

from ilpmd import qflia
from ilpmd.core import (Const, Exists, Fst, InputTable, Le, Not, Or, Pair, Prod, Sel, Snd,
                        SourceProblem, Union_, Var, conj, eq, rank)
from ilpmd.driver import bruteforce_source, solve_eager
from ilpmd.reduce import (QExists, QForall, QNot, QOr, QVar, ReductionTooLarge,
                          eliminate_pairs, encode_qbf, evaluate_qbf, reduce_formula, reduce_table)

from helpers import qflia_sat, random_existential, random_qbf

L = qflia.LinExpr


def pairs(name, rows):
    return InputTable(name, [Pair(Const(a), Const(b)) for a, b in rows])


def test_input_rows_guarded_by_true():
    t = InputTable("T", [Const(1), Const(2)])
    out = reduce_table(t)
    assert [(g.row, g.guard) for g in out] == [(Const(1), qflia.TRUE), (Const(2), qflia.TRUE)]


def test_selection_conjoins_substituted_condition():
    t = InputTable("T", [Var("a"), Const(5)])
    out = reduce_table(Sel("r", Le(Var("r"), Var("x")), t))
    assert out[0].guard == qflia.le(L.var("a"), L.var("x"))
    assert out[1].guard == qflia.le(L(const=5), L.var("x"))


def test_product_pairs_rows():
    a = InputTable("A", [Const(1), Const(2)])
    b = InputTable("B", [Const(3), Const(4)])
    out = reduce_table(Prod(a, b))
    assert [g.row for g in out] == [Pair(Const(x), Const(y)) for x in (1, 2) for y in (3, 4)]


def test_union_concatenates():
    a = InputTable("A", [Const(1)])
    assert len(reduce_table(Union_(a, a))) == 2


def test_exists_single_row_is_true():
    assert reduce_formula(Exists(InputTable("A", [Const(7)]))) == qflia.TRUE


def test_negation_is_structural():
    f = Le(Var("x"), Const(3))
    assert reduce_formula(Not(f)) == qflia.neg(reduce_formula(f))


def test_doubling_reduction():
    t = pairs("T", [(1, 2), (2, 4), (3, 6), (4, 8)])
    r = Var("r")
    f = conj(eq(Var("x"), Var("y")),
             Exists(Sel("r", conj(eq(Fst(r), Var("x")), eq(Snd(r), Var("y"))), t)))
    got = reduce_formula(f)
    x, y = L.var("x"), L.var("y")
    want = qflia.conj(qflia.eq(x, y), qflia.disj_all(
        qflia.conj(qflia.eq(L(const=a), x), qflia.eq(L(const=b), y))
        for a, b in [(1, 2), (2, 4), (3, 6), (4, 8)]))
    names = ["x", "y"]
    for env in itertools.product(range(-1, 10), repeat=2):
        e = dict(zip(names, env))
        assert qflia.evaluate(got, e) == qflia.evaluate(want, e)
    assert not qflia_sat(got, names, -10, 10)


def test_eliminate_pairs_examples():
    x, y, a, b, c = (Var(n) for n in "xyabc")
    assert eliminate_pairs(Fst(Pair(x, y))) == x
    assert eliminate_pairs(Snd(Pair(x, y))) == y
    assert eliminate_pairs(Fst(Snd(Pair(a, Pair(b, c))))) == b


def test_eliminate_pairs_rejects_opaque_accessor():
    with pytest.raises(ValueError):
        eliminate_pairs(Fst(Var("x")))


def test_reduction_limit():
    t = InputTable("T", [Const(i) for i in range(100)])
    with pytest.raises(ReductionTooLarge):
        reduce_formula(Exists(Prod(t, t)), limit=5000)
    reduce_formula(Exists(Prod(t, t)), limit=20000)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("n", [2, 5])
def test_size_bound_product_family(k, n):
    t = InputTable("T", [Const(i) for i in range(n)])
    d = t
    for _ in range(k - 1):
        d = Prod(d, t)
    assert rank(d) == k
    assert len(reduce_table(d)) == n ** k


def _closed_tables(f):
    """Table subterms reachable without entering a selection condition."""
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, (Sel, Prod, Union_, InputTable)):
            yield node
        if isinstance(node, Sel):
            stack.append(node.table)
        elif isinstance(node, Exists):
            stack.append(node.table)
        elif isinstance(node, Not):
            stack.append(node.arg)
        elif hasattr(node, "left") and not isinstance(node, Le):
            stack.extend((node.left, node.right))


def test_size_bound_random():
    seen = 0
    for seed in range(200):
        p = random_existential(seed)
        n = sum(len(t.rows) for t in p.tables.values())
        for d in _closed_tables(p.assertion):
            assert len(reduce_table(d)) <= n ** rank(d)
            seen += 1
    assert seen >= 200


def _with_negations(seed):
    """Random full-D formulas: existential instances with some parts negated."""
    rng = random.Random(seed)
    p = random_existential(seed, bound=3)
    f = p.assertion
    if rng.random() < 0.5:
        f = Not(f)
    return SourceProblem(p.declarations, p.tables, f)


def test_reduction_semantics_vs_direct_evaluation():
    checked = 0
    for seed in range(300):
        p = _with_negations(seed)
        if sum(len(t.rows) for t in p.tables.values()) > 8:
            continue
        names = sorted(p.declarations)
        red = reduce_formula(p.assertion)
        assert qflia_sat(red, names, -3, 3) == (bruteforce_source(p).status == "sat"), seed
        checked += 1
    assert checked >= 100


# ------------------------------------------------------------------------- QBF


def test_qbf_encoding_shape():
    q = QForall("x", QExists("y", QOr(QVar("x"), QNot(QVar("y")))))
    B = InputTable("B", [Const(0), Const(1)])
    x, y = Var("x"), Var("y")
    inner = Exists(Sel("y", Or(eq(x, Const(1)), eq(y, Const(0))), B))
    assert encode_qbf(q) == Not(Exists(Sel("x", Not(inner), B)))


def _decide(f):
    return solve_eager(SourceProblem({}, {}, f)).status


def test_qbf_exists_true():
    assert _decide(encode_qbf(QExists("x", QVar("x")))) == "sat"


def test_qbf_forall_false():
    assert _decide(encode_qbf(QForall("x", QVar("x")))) == "unsat"


def test_qbf_free_variable():
    with pytest.raises(ValueError):
        encode_qbf(QExists("x", QVar("z")))


def test_qbf_agreement_sample():
    rng = random.Random(2024)
    for _ in range(200):
        q = random_qbf(rng)
        assert (_decide(encode_qbf(q)) == "sat") == evaluate_qbf(q)

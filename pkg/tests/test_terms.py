import pytest
from hypothesis import given
from hypothesis import strategies as st

from schemunif.terms import (
    InvalidPosition,
    Variable,
    app,
    const,
    depth,
    positions,
    shift,
    subterm_at,
    subterms,
    term_key,
    var,
    var_sets,
    variables,
)

from .conftest import GOLDEN_BASE, X, Z, f, terms


def test_variable_str():
    assert str(var("X", 3)) == "X[3]"


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        Variable("X", -1)


def test_term_str():
    assert str(f(X(0), app("g", X(1)))) == "f(X[0], g(X[1]))"
    assert str(const("a")) == "a"


def test_shift_example():
    assert shift(2, f(X(0), Z(1))) == f(X(2), Z(3))


def test_shift_constant_fixed():
    t = f(const("a"), const("b"))
    assert shift(5, t) == t


@given(terms(), st.integers(min_value=0, max_value=10))
def test_shift_zero_is_identity(t, _d):
    assert shift(0, t) == t


@given(terms(), st.integers(min_value=0, max_value=6), st.integers(min_value=0, max_value=6))
def test_shift_composes_additively(t, d1, d2):
    assert shift(d1, shift(d2, t)) == shift(d1 + d2, t)


@given(terms(), st.integers(min_value=1, max_value=6))
def test_shift_preserves_structure(t, d):
    s = shift(d, t)
    assert depth(s) == depth(t)
    assert positions(s) == positions(t)
    assert {v.symbol for v in variables(s)} == {v.symbol for v in variables(t)}


def test_depth_of_golden_base():
    # f(f(X1, f(Z0, f(X1, f(X0, f(Z1, X0))))), L1) nests five f's under the
    # left argument of the root.
    assert depth(GOLDEN_BASE) == 7


def test_depth_leaves():
    assert depth(X(0)) == 1
    assert depth(const("a")) == 1


def test_positions_and_subterm_at():
    t = f(X(0), f(Z(1), X(2)))
    assert positions(t) == [(), (1,), (2,), (2, 1), (2, 2)]
    assert subterm_at(t, ()) == t
    assert subterm_at(t, (2, 1)) == Z(1)
    with pytest.raises(InvalidPosition):
        subterm_at(t, (3,))
    with pytest.raises(InvalidPosition):
        subterm_at(t, (1, 1))


@given(terms())
def test_every_position_resolves(t):
    seen = [subterm_at(t, p) for p in positions(t)]
    assert seen == list(subterms(t))


@given(terms())
def test_variables_matches_subterm_scan(t):
    from schemunif.terms import Var

    expect = {s.var for s in subterms(t) if isinstance(s, Var)}
    assert variables(t) == expect
    syms, idxs, vs = var_sets(t)
    assert vs == frozenset(expect)
    assert syms == {v.symbol for v in expect}
    assert idxs == {v.index for v in expect}


@given(terms(), terms())
def test_term_key_total_order(s, t):
    # Keys are canonical: equal keys only for equal terms.
    assert (term_key(s) == term_key(t)) == (s == t)

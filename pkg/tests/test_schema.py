from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schemunif.schema import Schema, SchemaClass, SchemaError, make_primitive
from schemunif.terms import shift, var, variables

from .conftest import (
    EX_BASE,
    GOLDEN_BASE,
    L,
    X,
    Y,
    Z,
    eq,
    f,
    h,
    primitive_schemas,
)


def W(i):
    return var("W", i)


def E(i):
    return var("E", i)


def test_duplicate_rule_rejected():
    with pytest.raises(SchemaError):
        Schema.of([("L", X(0)), ("L", Y(0))])


def test_binding_is_shifted_base():
    schema = Schema.of({"L": GOLDEN_BASE})
    assert schema.binding(L(3).var) == shift(3, GOLDEN_BASE)
    assert schema.binding(L(0).var) == GOLDEN_BASE


def test_unknown_symbol():
    schema = Schema.of({"L": GOLDEN_BASE})
    with pytest.raises(SchemaError):
        schema.base("M")


def test_classify_not_simple():
    # Two domain symbols inside one base term.
    schema = Schema.of({"L": f(var("M", 1), L(1)), "M": f(X(0), var("M", 1))})
    assert schema.classify() == SchemaClass.NOT_SIMPLE


def test_classify_simple():
    # Two distinct self-recursion offsets.
    schema = Schema.of({"L": f(L(1), L(2))})
    assert schema.classify() == SchemaClass.SIMPLE


def test_classify_uniform():
    schema = Schema.of({"L": f(X(0), f(X(1), L(2)))})
    assert schema.classify() == SchemaClass.UNIFORM


def test_classify_primitive():
    assert Schema.of({"L": GOLDEN_BASE}).classify() == SchemaClass.PRIMITIVE
    assert Schema.of({"L": f(X(0), L(0))}).classify() == SchemaClass.PRIMITIVE


def test_classify_nesting_is_monotone():
    order = [
        SchemaClass.NOT_SIMPLE,
        SchemaClass.SIMPLE,
        SchemaClass.UNIFORM,
        SchemaClass.PRIMITIVE,
    ]
    # Every primitive schema also satisfies the uniform and simple
    # conditions, by construction of classify's fall-through.
    schema = Schema.of({"L": EX_BASE})
    assert order.index(schema.classify()) >= order.index(SchemaClass.UNIFORM)


def test_t_substitution_restricts_to_term_variables():
    schema = Schema.of({"L": EX_BASE})
    t = h(L(2), Y(0))
    sub = schema.t_substitution(t)
    assert sub.domain() == {L(2).var}
    assert sub.apply(L(2)) == shift(2, EX_BASE)


def test_instance_zero_is_identity():
    schema = Schema.of({"L": EX_BASE})
    t = h(L(0), Y(0))
    assert schema.instance(t, 0) == t


def test_instance_one_unfolds_each_schema_var_once():
    schema = Schema.of({"L": EX_BASE})
    t = schema.instance(L(0), 1)
    assert t == EX_BASE
    t2 = schema.instance(L(0), 2)
    assert t2 == h(h(X(0), h(X(1), X(0))), shift(1, EX_BASE))


def test_recursion_offsets():
    schema = Schema.of({"L": f(X(0), f(X(1), L(2)))})
    assert schema.recursion_offsets("L") == {2}
    assert Schema.of({"L": f(X(0), X(1))}).recursion_offsets("L") == frozenset()


def test_normalize_folds_one_unfolding():
    schema = Schema.of({"L": EX_BASE})
    assert schema.normalize(EX_BASE) == L(0)
    assert schema.normalize(shift(4, EX_BASE)) == L(4)


def test_normalize_leaves_non_instances_alone():
    schema = Schema.of({"L": EX_BASE})
    t = h(Y(0), h(Y(1), Y(0)))
    assert schema.normalize(t) == t


def test_normalize_folds_inside_context():
    schema = Schema.of({"L": EX_BASE})
    t = h(Y(9), shift(2, EX_BASE))
    assert schema.normalize(t) == h(Y(9), L(2))


@settings(max_examples=200)
@given(
    primitive_schemas(),
    st.integers(min_value=0, max_value=5),
    st.integers(min_value=0, max_value=4),
)
def test_normalize_inverts_instance(schema, d, k):
    t = schema.instance(L(d), k)
    assert schema.normalize(t) == L(d)


# -- uniform -> primitive rewrite -------------------------------------------


LSR_RULES = {
    "L": f(
        f(X(0), f(Z(1), f(E(3), f(X(1), f(W(11), X(1)))))),
        L(1),
    ),
    "S": f(f(E(0), f(W(3), E(2))), var("S", 4)),
    "R": f(f(W(0), W(4)), var("R", 7)),
}


def lsr_problem_eqs():
    return frozenset([eq(L(0), Y(0)), eq(var("S", 0), Y(1))])


def test_make_primitive_identity_on_primitive_input():
    schema = Schema.of({"L": GOLDEN_BASE})
    eqs = frozenset([eq(L(0), Y(0))])
    out_eqs, out_schema, renaming = make_primitive(eqs, schema)
    assert out_schema == schema
    assert out_eqs == eqs
    assert not renaming


def test_make_primitive_rejects_simple_but_not_uniform():
    schema = Schema.of({"L": f(L(1), L(2))})
    with pytest.raises(SchemaError):
        make_primitive(frozenset([eq(L(0), Y(0))]), schema)


def test_flatten_three_rule_schema():
    schema = Schema.of(LSR_RULES)
    out_eqs, prim, renaming = make_primitive(lsr_problem_eqs(), schema)
    assert prim.classify() == SchemaClass.PRIMITIVE
    assert prim.domain == schema.domain
    for sym in prim.domain:
        offsets = prim.recursion_offsets(sym)
        assert all(o <= 1 for o in offsets)


def _parameter_profile(schema, sym):
    """Multiset of parameter (non-recursion) variable indices of one base,
    plus the occurrence count; insensitive to fresh symbol names."""
    params = [
        v for v in _occurrences(schema.base(sym)) if v.symbol not in schema.domain
    ]
    return len(params), Counter(v.index for v in params)


def _occurrences(t):
    from schemunif.terms import App, Var

    if isinstance(t, Var):
        return [t.var]
    out = []
    for a in t.args:
        out.extend(_occurrences(a))
    return out


def test_flatten_parameter_profiles():
    _, prim, _ = make_primitive(lsr_problem_eqs(), Schema.of(LSR_RULES))
    # After flattening, each base keeps its parameter occurrences but their
    # indices drop to the quotient by the old recursion offset.
    count_l, idx_l = _parameter_profile(prim, "L")
    count_s, idx_s = _parameter_profile(prim, "S")
    count_r, idx_r = _parameter_profile(prim, "R")
    assert (count_l, count_s, count_r) == (6, 3, 2)
    assert idx_l == Counter({0: 2, 1: 4})
    assert idx_s == Counter({0: 3})
    assert idx_r == Counter({0: 2})


def test_flatten_renaming_excludes_domain_symbols():
    _, prim, renaming = make_primitive(lsr_problem_eqs(), Schema.of(LSR_RULES))
    for v in renaming.domain():
        assert v.symbol not in prim.domain


def test_flatten_instances_agree_with_original():
    """The rewritten problem has the same bounded unifiability profile."""
    from schemunif.oracle import bounded_check
    from schemunif.solver import SchematicProblem

    schema = Schema.of(LSR_RULES)
    eqs = frozenset(
        [eq(f(Y(0), Y(0)), f(L(0), Y(1)))]
    )
    out_eqs, prim, _ = make_primitive(eqs, schema)
    before = bounded_check(SchematicProblem(eqs, schema), n=6)
    after = bounded_check(SchematicProblem(out_eqs, prim), n=6)
    assert (before.first_failure is None) == (after.first_failure is None)


def test_fresh_names_avoid_existing_symbols():
    _, prim, renaming = make_primitive(lsr_problem_eqs(), Schema.of(LSR_RULES))
    original_syms = set()
    for t in Schema.of(LSR_RULES).base_set():
        original_syms |= {v.symbol for v in variables(t)}
    introduced = set()
    for t in prim.base_set():
        introduced |= {v.symbol for v in variables(t)}
    fresh = introduced - original_syms
    assert fresh  # flattening had to invent names
    assert all("@" in name for name in fresh)

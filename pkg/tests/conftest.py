import glob
import os
import sys

import pytest
from hypothesis import strategies as st

from schemunif.cli import parse_problem
from schemunif.schema import Schema
from schemunif.solver import SchematicProblem
from schemunif.terms import app, var
from schemunif.unify import Equation

sys.setrecursionlimit(100_000)

HERE = os.path.dirname(__file__)
PROBLEM_DIR = os.path.join(HERE, "..", "problems")


def f(*args):
    return app("f", *args)


def h(*args):
    return app("h", *args)


def X(i):
    return var("X", i)


def Y(i):
    return var("Y", i)


def Z(i):
    return var("Z", i)


def L(i):
    return var("L", i)


def eq(lhs, rhs):
    return Equation(lhs, rhs)


GOLDEN_BASE = f(f(X(1), f(Z(0), f(X(1), f(X(0), f(Z(1), X(0)))))), L(1))


@pytest.fixture(scope="session")
def golden_problem():
    schema = Schema.of({"L": GOLDEN_BASE})
    lhs = f(X(4), L(0))
    rhs = f(f(Y(3), Y(3)), f(Y(0), f(Y(1), Y(0))))
    return SchematicProblem(frozenset([eq(lhs, rhs)]), schema)


@pytest.fixture(scope="session")
def golden_run(golden_problem):
    from schemunif.solver import u_sch_unif

    return u_sch_unif(golden_problem)


# h-schema of the worked two-instance example: one parameter repeated
# around the next parameter, recursing at offset 1.
EX_BASE = h(h(X(0), h(X(1), X(0))), L(1))


@pytest.fixture(scope="session")
def h_problem():
    schema = Schema.of({"L": EX_BASE})
    return SchematicProblem(
        frozenset([eq(L(0), h(Y(0), h(Y(1), Y(0))))]), schema
    )


def corpus_paths():
    return sorted(glob.glob(os.path.join(PROBLEM_DIR, "*.prob")))


@pytest.fixture(scope="session")
def corpus():
    out = []
    for path in corpus_paths():
        with open(path, encoding="utf-8") as fh:
            out.append((path, parse_problem(fh.read())))
    return out


# -- hypothesis strategies ---------------------------------------------------

SYMBOLS = ["X", "Y", "Z", "W", "V", "U"]
FUNS = [("f", 2), ("g", 1), ("a", 0), ("b", 0)]


def terms(max_depth=4, max_index=4, symbols=SYMBOLS):
    variables = st.builds(
        var,
        st.sampled_from(symbols),
        st.integers(min_value=0, max_value=max_index),
    )

    def extend(children):
        return st.one_of(
            *(
                st.builds(lambda *args, head=name: app(head, *args), *(
                    [children] * arity
                ))
                if arity
                else st.just(app(name))
                for name, arity in FUNS
            )
        )

    return st.recursive(variables, extend, max_leaves=2 ** (max_depth - 1))


def equations(max_eqs=5, **kw):
    return st.frozensets(
        st.builds(Equation, terms(**kw), terms(**kw)),
        min_size=1,
        max_size=max_eqs,
    )


def primitive_schemas():
    """Single-rule schemas recursing at offset 0 or 1."""

    def build(param_sym, idx1, idx2, offset, shape):
        rec = var("L", offset)
        p1 = var(param_sym, idx1)
        p2 = var(param_sym, idx2)
        if shape == 0:
            base = f(p1, rec)
        elif shape == 1:
            base = f(f(p1, p2), rec)
        else:
            base = f(p1, f(p2, rec))
        return Schema.of({"L": base})

    return st.builds(
        build,
        st.sampled_from(["X", "Y", "Z"]),
        st.integers(min_value=0, max_value=2),
        st.integers(min_value=0, max_value=2),
        st.integers(min_value=0, max_value=1),
        st.integers(min_value=0, max_value=2),
    )

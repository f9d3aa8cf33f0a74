"""Classical substitutions and a most-general-unifier engine.

A Martelli-Montanari style rule loop (delete / decompose / orient /
eliminate) over an equation set, with a mandatory occurs check.  Failure is
reported as a verdict (Clash or Cycle) carrying the offending equation, not
as an exception.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .terms import App, Term, Var, Variable, term_key, variables


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"

    def key(self) -> tuple:
        return (term_key(self.lhs), term_key(self.rhs))

    def flip(self) -> "Equation":
        return Equation(self.rhs, self.lhs)


def eq_vars(eqs: Iterable[Equation]) -> frozenset[Variable]:
    out: set[Variable] = set()
    for e in eqs:
        out |= variables(e.lhs) | variables(e.rhs)
    return frozenset(out)


def sorted_eqs(eqs: Iterable[Equation]) -> list[Equation]:
    return sorted(eqs, key=Equation.key)


class Substitution:
    """A finite map from variables to terms; self-bindings are dropped."""

    __slots__ = ("_map",)

    def __init__(self, bindings: Mapping[Variable, Term] | None = None):
        m: dict[Variable, Term] = {}
        if bindings:
            for v, t in bindings.items():
                if not (isinstance(t, Var) and t.var == v):
                    m[v] = t
        self._map = m

    @property
    def mapping(self) -> dict[Variable, Term]:
        return dict(self._map)

    def domain(self) -> frozenset[Variable]:
        return frozenset(self._map)

    def __bool__(self) -> bool:
        return bool(self._map)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Substitution) and self._map == other._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __str__(self) -> str:
        items = sorted(self._map.items(), key=lambda kv: (kv[0].symbol, kv[0].index))
        return "{" + ", ".join(f"{v} -> {t}" for v, t in items) + "}"

    def __call__(self, t: Term) -> Term:
        return self.apply(t)

    def apply(self, t: Term) -> Term:
        if isinstance(t, Var):
            return self._map.get(t.var, t)
        return App(t.head, tuple(self.apply(a) for a in t.args))

    def apply_eq(self, e: Equation) -> Equation:
        return Equation(self.apply(e.lhs), self.apply(e.rhs))

    def apply_eqs(self, eqs: Iterable[Equation]) -> frozenset[Equation]:
        return frozenset(self.apply_eq(e) for e in eqs)

    def compose(self, other: "Substitution") -> "Substitution":
        """(self then other): x(self;other) = other(self(x))."""
        m = {v: other.apply(t) for v, t in self._map.items()}
        for v, t in other._map.items():
            m.setdefault(v, t)
        return Substitution(m)


EMPTY_SUB = Substitution()


@dataclass(frozen=True)
class UnifyFailure:
    kind: str  # "clash" | "cycle"
    equation: Equation


UnifyResult = Substitution | UnifyFailure


def occurs(v: Variable, t: Term) -> bool:
    return v in variables(t)


def unify(eqs: Iterable[Equation]) -> Substitution | UnifyFailure:
    """Most general unifier of an equation set, or a Clash/Cycle verdict."""
    work = sorted_eqs(eqs)
    sub: dict[Variable, Term] = {}

    def resolve(t: Term) -> Term:
        # Walk variable chains so bindings stay fully applied (keeps the
        # result idempotent without a second pass).
        while isinstance(t, Var) and t.var in sub:
            t = sub[t.var]
        return t

    def deep_apply(t: Term) -> Term:
        t = resolve(t)
        if isinstance(t, Var):
            return t
        return App(t.head, tuple(deep_apply(a) for a in t.args))

    while work:
        e = work.pop(0)
        s, t = resolve(e.lhs), resolve(e.rhs)
        if s == t:
            continue
        if isinstance(s, App) and isinstance(t, App):
            if s.head != t.head or len(s.args) != len(t.args):
                return UnifyFailure("clash", Equation(s, t))
            work = [Equation(a, b) for a, b in zip(s.args, t.args)] + work
            continue
        if isinstance(t, Var) and not isinstance(s, Var):
            s, t = t, s
        assert isinstance(s, Var)
        t = deep_apply(t)
        if occurs(s.var, t):
            return UnifyFailure("cycle", Equation(s, t))
        sub[s.var] = t
        # Keep existing bindings fully applied under the new one.
        one = Substitution({s.var: t})
        for v in list(sub):
            if v != s.var:
                sub[v] = one.apply(sub[v])

    return Substitution(sub)


def unifiable(eqs: Iterable[Equation]) -> bool:
    return isinstance(unify(eqs), Substitution)


def mgu_or_none(eqs: Iterable[Equation]) -> Optional[Substitution]:
    r = unify(eqs)
    return r if isinstance(r, Substitution) else None

"""The schema-aware unification engine.

A worklist procedure that saturates an equation set under decomposition,
orientation and transitivity (with eager deletion of reflexive equations),
then repeatedly moves eligible bindings into a store, and finally runs plain
unification over everything as the clash/cycle gate.  The store it builds is
the part of the solved form that stays relevant when the schema is unfolded
one more step.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .schema import Schema
from .terms import App, Term, Var, Variable, variables
from .unify import Equation, UnifyFailure, sorted_eqs, unify


@dataclass(frozen=True)
class FinalConfiguration:
    store: frozenset[Equation]
    active: frozenset[Equation]
    verdict: str  # "ok" | "clash" | "cycle"
    offending: Optional[Equation] = None

    @property
    def ok(self) -> bool:
        return self.verdict == "ok"


def _is_var(t: Term) -> bool:
    return isinstance(t, Var)


def _semigroup_reachable(delta: int, generators: Iterable[int]) -> bool:
    """Is delta a sum (with repetition) of the given positive generators?"""
    gens = sorted({g for g in generators if g > 0})
    if delta == 0:
        return True
    if not gens:
        return False
    can = [True] + [False] * delta
    for n in range(1, delta + 1):
        can[n] = any(g <= n and can[n - g] for g in gens)
    return can[delta]


def reachable_by_unfolding(y: Variable, z: Variable, schema: Schema) -> bool:
    """Does y occur in some k-fold unfolding of the schema variable z?

    Walks the schema variables reachable from z (indices only grow, and only
    indices <= idx(y) can still contribute an occurrence of y), checking at
    each of them whether one more unfolding emits y directly.
    """
    seen: set[Variable] = set()
    frontier = deque([z])
    while frontier:
        w = frontier.popleft()
        if w in seen or not schema.contains(w):
            continue
        seen.add(w)
        base = schema.base(w.symbol)
        own = schema.recursion_offsets(w.symbol)
        for v in variables(base):
            if v.symbol == y.symbol:
                # Parameter occurrence at offset v.index, re-emitted after
                # every self-recursion round of w.
                delta = y.index - w.index - v.index
                if delta >= 0 and _semigroup_reachable(delta, own):
                    return True
            if v.symbol in schema.domain and v.symbol != w.symbol:
                nxt = Variable(v.symbol, w.index + v.index)
                if nxt.index <= y.index:
                    frontier.append(nxt)
        # Self-recursion with offset 0 re-emits the same variables; positive
        # offsets are folded into the semigroup test above, so no need to
        # enqueue shifted copies of w itself.
    return False


def store_eligible(
    eq: Equation, store: frozenset[Equation], schema: Schema
) -> bool:
    if not isinstance(eq.lhs, Var):
        return False
    y = eq.lhs.var
    r = eq.rhs
    if schema.contains(y):
        # Condition 1: bindings on schema variables, unless the rhs is a
        # plain variable outside the schema.
        return not (isinstance(r, Var) and not schema.contains(r.var))
    # Condition 2: tied to an existing store entry.
    for stored in store:
        x = stored.lhs
        assert isinstance(x, Var)
        if y in variables(stored.rhs) or r == x or y == x.var:
            return True
    # Condition 3: reachable from a schema variable of the store by unfolding.
    store_vars: set[Variable] = set()
    for stored in store:
        store_vars |= variables(stored.lhs) | variables(stored.rhs)
    return any(
        schema.contains(z) and reachable_by_unfolding(y, z, schema)
        for z in sorted(store_vars)
    )


class _State:
    """Worklists, the change buffer, and the transitivity-pair dedup table."""

    def __init__(self, eqs: Iterable[Equation]):
        self.changes: list[Equation] = sorted_eqs(eqs)
        self.var_dict: dict[Variable, set[Equation]] = {}
        self.orient1: deque[Equation] = deque()
        self.decom: deque[Equation] = deque()
        self.orient2: deque[Equation] = deque()
        self.trans: deque[tuple[Equation, Equation]] = deque()


class ClashDetected(Exception):
    def __init__(self, equation: Equation):
        super().__init__(str(equation))
        self.equation = equation


def _find_clash(changes: Iterable[Equation]) -> Optional[Equation]:
    for e in changes:
        if (
            isinstance(e.lhs, App)
            and isinstance(e.rhs, App)
            and (e.lhs.head != e.rhs.head or len(e.lhs.args) != len(e.rhs.args))
        ):
            return e
    return None


def _update(state: _State, active: set[Equation]) -> bool:
    bad = _find_clash(state.changes)
    if bad is not None:
        raise ClashDetected(bad)
    changes = sorted_eqs(state.changes)
    state.orient1.extend(
        e for e in changes if not _is_var(e.lhs) and _is_var(e.rhs)
    )
    state.decom.extend(
        e
        for e in changes
        if isinstance(e.lhs, App)
        and isinstance(e.rhs, App)
        and e.lhs.head == e.rhs.head
        and len(e.lhs.args) == len(e.rhs.args)
    )
    state.orient2.extend(
        e
        for e in changes
        if _is_var(e.lhs) and _is_var(e.rhs) and e.flip() not in active
    )
    for e in changes:
        if isinstance(e.lhs, Var):
            known = state.var_dict.setdefault(e.lhs.var, set())
            if e not in known:
                state.trans.extend((e, other) for other in sorted_eqs(known))
                known.add(e)
    state.changes = []
    return bool(state.orient1 or state.decom or state.orient2 or state.trans)


def th_unif(eqs: Iterable[Equation], schema: Schema) -> FinalConfiguration:
    """Saturate, store, and gate an equation set against the schema."""
    active: set[Equation] = set(eqs)
    store: set[Equation] = set()
    state = _State(active)

    try:
        while _update(state, active):
            while state.orient1:
                e = state.orient1.popleft()
                if e in active:
                    active.discard(e)
                    flipped = e.flip()
                    if flipped not in active:
                        active.add(flipped)
                        state.changes.append(flipped)
            while state.decom:
                e = state.decom.popleft()
                if e in active:
                    active.discard(e)
                    assert isinstance(e.lhs, App) and isinstance(e.rhs, App)
                    for a, b in zip(e.lhs.args, e.rhs.args):
                        if a == b:
                            continue  # eager reflexive deletion
                        new = Equation(a, b)
                        if new not in active:
                            active.add(new)
                            state.changes.append(new)
            while state.orient2:
                e = state.orient2.popleft()
                if e in active and e.flip() not in active:
                    flipped = e.flip()
                    active.add(flipped)
                    state.changes.append(flipped)
            while state.trans:
                e1, e2 = state.trans.popleft()
                if e1 in active and e2 in active and e1.rhs != e2.rhs:
                    new = Equation(e1.rhs, e2.rhs)
                    if new not in active:
                        active.add(new)
                        state.changes.append(new)
    except ClashDetected as clash:
        return FinalConfiguration(
            frozenset(store), frozenset(active), "clash", clash.equation
        )

    while True:
        movable = [
            e
            for e in sorted_eqs(active)
            if store_eligible(e, frozenset(store), schema)
        ]
        if not movable:
            break
        for e in movable:
            store.add(e)
            active.discard(e)

    gate = unify(list(store) + list(active))
    if isinstance(gate, UnifyFailure):
        return FinalConfiguration(
            frozenset(store), frozenset(active), gate.kind, gate.equation
        )
    return FinalConfiguration(frozenset(store), frozenset(active), "ok")

"""Indexed first-order terms.

Variables carry a symbol and a natural-number index (``X[3]``); function
applications have a fixed head symbol and an ordered argument tuple.
Constants are arity-0 applications.  Everything here is an immutable value
with structural equality, so terms can live in sets and dict keys freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union


@dataclass(frozen=True, order=True)
class Variable:
    symbol: str
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"negative variable index: {self.symbol}[{self.index}]")
        if not self.symbol:
            raise ValueError("empty variable symbol")

    def __str__(self) -> str:
        return f"{self.symbol}[{self.index}]"


@dataclass(frozen=True)
class Var:
    var: Variable

    def __str__(self) -> str:
        return str(self.var)


@dataclass(frozen=True)
class App:
    head: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.head
        return f"{self.head}({', '.join(map(str, self.args))})"


Term = Union[Var, App]

# A position is a tuple of 1-based argument indices; () is the root.
Position = tuple[int, ...]


def var(symbol: str, index: int) -> Term:
    return Var(Variable(symbol, index))


def app(head: str, *args: Term) -> Term:
    return App(head, tuple(args))


def const(name: str) -> Term:
    return App(name, ())


def shift(d: int, t: Term) -> Term:
    """Add d to the index of every variable in t."""
    if isinstance(t, Var):
        return Var(Variable(t.var.symbol, t.var.index + d))
    return App(t.head, tuple(shift(d, a) for a in t.args))


def depth(t: Term) -> int:
    if isinstance(t, Var) or not t.args:
        return 1
    return 1 + max(depth(a) for a in t.args)


def positions(t: Term) -> list[Position]:
    out: list[Position] = [()]
    if isinstance(t, App):
        for i, a in enumerate(t.args, start=1):
            out.extend((i,) + p for p in positions(a))
    return out


def subterm_at(t: Term, p: Position) -> Term:
    for i in p:
        if isinstance(t, Var) or not (1 <= i <= len(t.args)):
            raise InvalidPosition(f"position {p} not valid in {t}")
        t = t.args[i - 1]
    return t


class InvalidPosition(Exception):
    pass


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def variables(t: Term) -> frozenset[Variable]:
    if isinstance(t, Var):
        return frozenset((t.var,))
    out: set[Variable] = set()
    for a in t.args:
        out |= variables(a)
    return frozenset(out)


def var_sets(t: Term) -> tuple[frozenset[str], frozenset[int], frozenset[Variable]]:
    """(symbols, indices, variables) occurring in t."""
    vs = variables(t)
    return (
        frozenset(v.symbol for v in vs),
        frozenset(v.index for v in vs),
        vs,
    )


def term_key(t: Term) -> tuple:
    """Canonical sort key: a deterministic structural serialization.

    All equation-set iteration in the solver sorts by this key so traces are
    byte-stable from run to run.
    """
    if isinstance(t, Var):
        return (0, t.var.symbol, t.var.index)
    return (1, t.head, len(t.args), tuple(term_key(a) for a in t.args))

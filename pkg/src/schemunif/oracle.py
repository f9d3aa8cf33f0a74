"""Bounded brute-force check of schematic unifiability.

Instantiates the problem directly for i = 0..N and runs plain unification on
each instance.  Slow and only a prefix check, but entirely independent of the
schema-aware engine, which makes it a useful differential oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .solver import SchematicProblem
from .terms import Term, Var, depth
from .unify import Equation, UnifyFailure, eq_vars, unify

DEFAULT_N = 25
DEFAULT_NODE_CAP = 200_000


@dataclass(frozen=True)
class InstanceSize:
    nodes: int
    max_depth: int
    var_count: int


@dataclass
class OracleReport:
    checked_up_to: int  # largest instance index actually unified
    first_failure: Optional[tuple[int, str]]  # (instance, "clash" | "cycle")
    per_instance_sizes: list[InstanceSize] = field(default_factory=list)
    size_capped_at: Optional[int] = None  # instance skipped for size, if any

    @property
    def ok(self) -> bool:
        return self.first_failure is None


def _node_count(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(_node_count(a) for a in t.args)


def bounded_check(
    problem: SchematicProblem,
    n: int = DEFAULT_N,
    node_cap: int = DEFAULT_NODE_CAP,
) -> OracleReport:
    report = OracleReport(checked_up_to=-1, first_failure=None)
    eqs = problem.equations
    for i in range(n + 1):
        if i > 0:
            # One more unfolding round on top of the previous instance.
            eqs = frozenset(
                Equation(
                    problem.schema.t_substitution(e.lhs).apply(e.lhs),
                    problem.schema.t_substitution(e.rhs).apply(e.rhs),
                )
                for e in eqs
            )
        nodes = sum(_node_count(e.lhs) + _node_count(e.rhs) for e in eqs)
        if nodes > node_cap:
            report.size_capped_at = i
            break
        report.per_instance_sizes.append(
            InstanceSize(
                nodes=nodes,
                max_depth=max(
                    max(depth(e.lhs), depth(e.rhs)) for e in eqs
                ),
                var_count=len(eq_vars(eqs)),
            )
        )
        result = unify(eqs)
        report.checked_up_to = i
        if isinstance(result, UnifyFailure):
            if report.first_failure is None:
                report.first_failure = (i, result.kind)
        else:
            # Once an instance fails, all later ones must fail too; a later
            # success would mean one of the two unifiers is wrong.
            assert report.first_failure is None, (
                f"instance {i} unifiable after failure at "
                f"{report.first_failure}"
            )
    return report

"""The pure equality theory over an infinite domain of distinct individuals.

Its signature is empty, so cores are conjunctions of variable equations.
Solved form: every equation is oriented leader-first (leader strictly
greater under the session rank order) and each leader occurs exactly once
in the whole conjunction.
"""
from __future__ import annotations

from typing import Sequence

from .core import (
    FalseAtom,
    TheoryError,
    TrueAtom,
    VarEq,
    Variable,
    eq_signature,
)
from .theory import (
    Decomposition,
    FALSE_CORE,
    FlatCore,
    TheoryPlugin,
    check_decompose_precondition,
)


def eq_solve(core: FlatCore) -> FlatCore:
    """Solve a conjunction of variable equations.

    Union-find over the equated classes; each class is then written back as
    `member = representative` with the lowest-ranked member as
    representative, which is exactly the solved shape (leaders are the
    non-representatives and occur once each).
    """
    if core.is_false:
        return FALSE_CORE
    parent: dict[Variable, Variable] = {}

    def find(v: Variable) -> Variable:
        root = v
        while parent.get(root, root) is not root:
            root = parent[root]
        while parent.get(v, v) is not v:
            parent[v], v = root, parent[v]
        return root

    for a in core.atoms:
        if isinstance(a, TrueAtom):
            continue
        if isinstance(a, FalseAtom):
            return FALSE_CORE
        if not isinstance(a, VarEq):
            raise TheoryError(f"eq admits only variable equations, got {a!r}")
        x, y = find(a.lhs), find(a.rhs)
        if x is y:
            continue
        if x.rank < y.rank:
            x, y = y, x
        parent[x] = y
    return FlatCore.of(VarEq(v, find(v)) for v in parent)


def eq_solved(core: FlatCore) -> bool:
    """Syntactic test for the solved shape (false excluded)."""
    if core.is_false:
        return False
    leaders = []
    occurrences: dict[Variable, int] = {}
    for a in core.atoms:
        if not isinstance(a, VarEq):
            return False
        if a.lhs.rank <= a.rhs.rank:
            return False
        leaders.append(a.lhs)
        occurrences[a.lhs] = occurrences.get(a.lhs, 0) + 1
        occurrences[a.rhs] = occurrences.get(a.rhs, 0) + 1
    return all(occurrences[x] == 1 for x in leaders)


def eq_decompose(bound: Sequence[Variable], core: FlatCore) -> Decomposition:
    """Decompose ``exists bound. core`` (solving the core first)."""
    check_decompose_precondition(bound, core)
    solved = core if eq_solved(core) or core.is_false else eq_solve(core)
    if solved.is_false:
        return Decomposition((), FALSE_CORE, (), FlatCore.of(()), (), FlatCore.of(()))
    bound_set = frozenset(bound)
    leaders = {a.lhs for a in solved.atoms}
    free_led = FlatCore.of(a for a in solved.atoms if a.lhs not in bound_set)
    bound_led = FlatCore.of(a for a in solved.atoms if a.lhs in bound_set)
    x_l = tuple(sorted(bound_set & leaders, key=lambda v: v.rank))
    x_n = tuple(sorted(bound_set - leaders, key=lambda v: v.rank))
    return Decomposition((), free_led, x_n, FlatCore.of(()), x_l, bound_led)


class EqTheory(TheoryPlugin):
    name = "eq"
    signature = eq_signature()
    psi_description = (
        "Only the formula `false`: the axioms grant infinitely many pairwise "
        "distinct individuals, so `exists x. true` already has infinitely "
        "many witnesses with no exclusions needed."
    )

    def flat_to_core(self, flat: FlatCore) -> FlatCore:
        if flat.is_false:
            return FALSE_CORE
        for a in flat.atoms:
            if not isinstance(a, (VarEq, TrueAtom)):
                raise TheoryError(f"foreign atom for eq: {a!r}")
        return flat

    def conjoin(self, a: FlatCore, b: FlatCore) -> FlatCore:
        return a.conjoin(b)

    def solve_core(self, core: FlatCore) -> FlatCore:
        return eq_solve(core)

    def decompose(self, bound: Sequence[Variable], core: FlatCore) -> Decomposition:
        return eq_decompose(bound, core)

    def in_a_prime(self, bound: Sequence[Variable], core: FlatCore) -> bool:
        if bound:
            return False
        return core.is_false or eq_solved(core)

    def in_a_dprime(self, bound: Sequence[Variable], core: FlatCore) -> bool:
        return core.is_true

    def in_a_tprime(self, bound: Sequence[Variable], core: FlatCore) -> bool:
        if not eq_solved(core):
            return False
        return frozenset(bound) == {a.lhs for a in core.atoms} and len(
            set(bound)
        ) == len(tuple(bound))

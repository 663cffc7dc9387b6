"""Finite or infinite (rational) trees over a declared constructor signature.

Unification never performs an occurs check: x = f(x) is solved as-is (it
denotes the unique rational tree folding that equation).  Solving applies
the clash/decompose/orient rules on a worklist keyed by left-hand sides;
the decomposition of a quantified core is driven by reachability of
equations from the free variables.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .core import (
    AppEq,
    FalseAtom,
    Signature,
    TheoryError,
    TrueAtom,
    VarEq,
    Variable,
)
from .theory import (
    Decomposition,
    FALSE_CORE,
    FlatCore,
    TheoryPlugin,
    check_decompose_precondition,
)


@dataclass(frozen=True)
class ReachabilityReport:
    reachable_vars: frozenset[Variable]
    reachable_eqs: frozenset[int]


def _measure(state_atoms, queue) -> tuple[int, int, int, int]:
    """Termination measure: (#applications, #atoms, rank sum, #misoriented)."""
    n1 = n2 = n3 = n4 = 0
    for a in list(state_atoms) + list(queue):
        n2 += 1
        if isinstance(a, AppEq):
            n1 += 1
            n3 += a.lhs.rank + sum(v.rank for v in a.args)
        elif isinstance(a, VarEq):
            n3 += a.lhs.rank + a.rhs.rank
            if a.rhs.rank > a.lhs.rank:
                n4 += 1
    return (n1, n2, n3, n4)


class _Unifier:
    """One lhs-indexed worklist pass; each insertion fires at most one rule."""

    def __init__(self, debug: bool = False):
        self.var_eq: dict[Variable, Variable] = {}
        self.app_eq: dict[Variable, AppEq] = {}
        self.queue: deque = deque()
        self.false = False
        self.debug = debug

    def _stored(self):
        yield from (VarEq(x, y) for x, y in self.var_eq.items())
        yield from self.app_eq.values()

    def run(self, core: FlatCore) -> FlatCore:
        if core.is_false:
            return FALSE_CORE
        for a in core.atoms:
            if isinstance(a, TrueAtom):
                continue
            if isinstance(a, FalseAtom):
                return FALSE_CORE
            self.queue.append(a)
        while self.queue and not self.false:
            before = None
            if self.debug:
                before = _measure(self._stored(), self.queue)
            atom = self.queue.popleft()
            if isinstance(atom, VarEq):
                fired = self.insert_var(atom.lhs, atom.rhs)
            else:
                fired = self.insert_app(atom.lhs, atom)
            if self.debug and not self.false:
                after = _measure(self._stored(), self.queue)
                if fired:
                    assert after < before, f"measure did not decrease: {before} -> {after}"
                else:
                    assert after == before, f"plain store changed the measure"
        if self.false:
            return FALSE_CORE
        return FlatCore.of(self._stored())

    def insert_var(self, x: Variable, y: Variable) -> bool:
        if x == y:  # x = x vanishes
            return True
        oriented = False
        if y.rank > x.rank:  # orient toward the greater variable
            x, y = y, x
            oriented = True
        if x in self.var_eq:
            z = self.var_eq[x]
            if z == y:  # duplicate conjunct
                return True
            # Two variable equations share the leader x: keep the smaller
            # right side and equate the two right sides.
            lo, hi = (y, z) if y.rank < z.rank else (z, y)
            self.var_eq[x] = lo
            self.queue.append(VarEq(hi, lo))
            return True
        if x in self.app_eq:
            # Push the application down along the new x = y.
            app = self.app_eq.pop(x)
            self.var_eq[x] = y
            self.queue.append(AppEq(y, app.fname, app.args))
            return True
        self.var_eq[x] = y
        return oriented

    def insert_app(self, x: Variable, app: AppEq) -> bool:
        if x in self.var_eq:
            # Push the application down along the stored x = y.
            y = self.var_eq[x]
            self.queue.append(AppEq(y, app.fname, app.args))
            return True
        if x in self.app_eq:
            other = self.app_eq[x]
            if other.fname != app.fname or len(other.args) != len(app.args):
                self.false = True  # constructor clash
                return True
            if other.args == app.args:  # duplicate conjunct
                return True
            # Same constructor twice: keep one copy, equate arguments
            # pairwise.  The kept copy is the one with the larger
            # (symbol, argument-rank) key, which makes the result canonical
            # under commutativity of conjunction.
            kept, dropped = other, app
            if _app_key(app) > _app_key(other):
                kept, dropped = app, other
            self.app_eq[x] = kept
            for a, b in zip(kept.args, dropped.args):
                self.queue.append(VarEq(a, b))
            return True
        self.app_eq[x] = app
        return False


def _app_key(a: AppEq):
    return (a.fname, tuple(v.rank for v in a.args))


def tree_unify(core: FlatCore, debug: bool = False) -> FlatCore:
    """false or an equivalent (>)-solved conjunction of flat equations."""
    for a in core.atoms:
        if not isinstance(a, (TrueAtom, FalseAtom, VarEq, AppEq)):
            raise TheoryError(f"foreign atom for trees: {a!r}")
    return _Unifier(debug).run(core)


def tree_solved(core: FlatCore) -> bool:
    if core.is_false:
        return False
    lhs_seen: set[Variable] = set()
    for a in core.atoms:
        if isinstance(a, VarEq):
            if a.lhs.rank <= a.rhs.rank:
                return False
            lhs = a.lhs
        elif isinstance(a, AppEq):
            lhs = a.lhs
        else:
            return False
        if lhs in lhs_seen:
            return False
        lhs_seen.add(lhs)
    return True


def reachable(bound: Sequence[Variable], core: FlatCore) -> ReachabilityReport:
    """Fixpoint of: equations with free left-hand sides are reachable, their
    right-hand variables are reachable, and so are those variables' own
    equations."""
    if core.is_false:
        raise TheoryError("reachability is undefined on the false core")
    bound_set = frozenset(bound)
    by_lhs: dict[Variable, list[int]] = {}
    for i, a in enumerate(core.atoms):
        by_lhs.setdefault(a.lhs, []).append(i)

    def rhs_vars(a) -> tuple[Variable, ...]:
        return (a.rhs,) if isinstance(a, VarEq) else a.args

    eqs: set[int] = set()
    vars_: set[Variable] = set()
    frontier = [i for i, a in enumerate(core.atoms) if a.lhs not in bound_set]
    while frontier:
        i = frontier.pop()
        if i in eqs:
            continue
        eqs.add(i)
        for v in rhs_vars(core.atoms[i]):
            if v not in vars_:
                vars_.add(v)
                frontier.extend(by_lhs.get(v, ()))
    return ReachabilityReport(frozenset(vars_), frozenset(eqs))


def tree_decompose(bound: Sequence[Variable], core: FlatCore) -> Decomposition:
    check_decompose_precondition(bound, core)
    solved = core if tree_solved(core) else tree_unify(core)
    if solved.is_false:
        return Decomposition((), FALSE_CORE, (), FlatCore.of(()), (), FlatCore.of(()))
    report = reachable(bound, solved)
    bound_set = frozenset(bound)
    lhs_set = {a.lhs for a in solved.atoms}
    reach_eqs = FlatCore.of(
        a for i, a in enumerate(solved.atoms) if i in report.reachable_eqs
    )
    unreach_eqs = FlatCore.of(
        a for i, a in enumerate(solved.atoms) if i not in report.reachable_eqs
    )
    x1 = tuple(sorted(bound_set & report.reachable_vars, key=lambda v: v.rank))
    x2 = tuple(
        sorted((bound_set - report.reachable_vars) - lhs_set, key=lambda v: v.rank)
    )
    x3 = tuple(
        sorted((bound_set - report.reachable_vars) & lhs_set, key=lambda v: v.rank)
    )
    return Decomposition(x1, reach_eqs, x2, FlatCore.of(()), x3, unreach_eqs)


class TreesTheory(TheoryPlugin):
    name = "trees"
    psi_description = (
        "Formulas `exists ys. u = f(ys)` for every non-constant constructor "
        "f (the symbol universe is treated as infinite, with the declared "
        "signature a finite subset); `false` alone when no such constructor "
        "exists."
    )

    def __init__(self, signature: Signature, debug: bool = False):
        if signature.theory != "trees":
            raise TheoryError("TreesTheory requires a trees signature")
        self.signature = signature
        self.debug = debug

    def flat_to_core(self, flat: FlatCore) -> FlatCore:
        if flat.is_false:
            return FALSE_CORE
        for a in flat.atoms:
            if isinstance(a, (TrueAtom, VarEq)):
                continue
            if isinstance(a, AppEq):
                arity = self.signature.fn_arity(a.fname)
                if arity is None or arity != len(a.args):
                    raise TheoryError(f"foreign constructor {a.fname!r}/{len(a.args)}")
            else:
                raise TheoryError(f"foreign atom for trees: {a!r}")
        return flat

    def conjoin(self, a: FlatCore, b: FlatCore) -> FlatCore:
        return a.conjoin(b)

    def solve_core(self, core: FlatCore) -> FlatCore:
        return tree_unify(core, debug=self.debug)

    def decompose(self, bound: Sequence[Variable], core: FlatCore) -> Decomposition:
        return tree_decompose(bound, core)

    def in_a_prime(self, bound: Sequence[Variable], core: FlatCore) -> bool:
        if core.is_false:
            return not bound
        if not tree_solved(core):
            return False
        bound_set = frozenset(bound)
        free = core.variables() - bound_set
        if bound_set and free:
            if min(v.rank for v in bound_set) <= max(v.rank for v in free):
                return False
        report = reachable(bound, core)
        return bound_set <= report.reachable_vars and len(
            report.reachable_eqs
        ) == len(core.atoms)

    def in_a_dprime(self, bound: Sequence[Variable], core: FlatCore) -> bool:
        return core.is_true

    def in_a_tprime(self, bound: Sequence[Variable], core: FlatCore) -> bool:
        if not tree_solved(core):
            return False
        return frozenset(bound) == {a.lhs for a in core.atoms} and len(
            set(bound)
        ) == len(tuple(bound))

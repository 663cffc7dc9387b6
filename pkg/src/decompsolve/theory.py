"""The contract every decomposable-theory plug-in satisfies.

A plug-in owns a canonical conjunction type (its "core", an element of the
theory's T-closed set A) and knows how to split a quantified core into the
three nested blocks consumed by the engine's rewriting rules:

    exists x' a' & (exists x'' a'' & (exists x''' a''' & psi))

where the first block admits at most one witness, the middle block is
infinitely satisfiable, and the last block has exactly one witness.
"""
from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

from .core import (
    App,
    Eq,
    Exists,
    FlatAtom,
    Formula,
    Not,
    RelAtom,
    Session,
    Signature,
    TrueAtom,
    FalseAtom,
    VarEq,
    AppEq,
    Variable,
    atom_render,
    atom_rename,
    atom_sort_key,
    atom_to_formula,
    atom_vars,
    canonical_conjunction,
    conjoin_formulas,
)


def atom_display(a: FlatAtom) -> str:
    """Human-facing rendering in the concrete grammar."""
    if isinstance(a, TrueAtom):
        return "true"
    if isinstance(a, FalseAtom):
        return "false"
    if isinstance(a, VarEq):
        return f"{a.lhs.name} = {a.rhs.name}"
    if isinstance(a, AppEq):
        args = ", ".join(v.name for v in a.args)
        return f"{a.lhs.name} = {a.fname}({args})" if a.args else f"{a.lhs.name} = {a.fname}"
    args = ", ".join(v.name for v in a.args)
    return f"{a.name}({args})" if a.args else a.name


# ---------------------------------------------------------------------------
# Flat cores (the T-closed set for equality and trees is FL itself)


@dataclass(frozen=True)
class FlatCore:
    """Canonical conjunction of flat atoms, with an absorbing false marker."""

    is_false: bool
    atoms: tuple[FlatAtom, ...] = ()

    @staticmethod
    def of(atoms: Iterable[FlatAtom]) -> "FlatCore":
        items = list(atoms)
        if any(isinstance(a, FalseAtom) for a in items):
            return FALSE_CORE
        kept = canonical_conjunction(
            items, atom_sort_key, lambda a: isinstance(a, TrueAtom)
        )
        return FlatCore(False, kept)

    @property
    def is_true(self) -> bool:
        return not self.is_false and not self.atoms

    def variables(self) -> frozenset[Variable]:
        return frozenset(v for a in self.atoms for v in atom_vars(a))

    def rename(self, m: dict[Variable, Variable]) -> "FlatCore":
        if self.is_false or not m:
            return self
        return FlatCore.of(atom_rename(a, m) for a in self.atoms)

    def conjoin(self, other: "FlatCore") -> "FlatCore":
        if self.is_false or other.is_false:
            return FALSE_CORE
        return FlatCore.of(self.atoms + other.atoms)

    def render_key(self, token: Callable[[Variable], str]) -> str:
        if self.is_false:
            return "false"
        if not self.atoms:
            return "true"
        return "&".join(sorted(atom_render(a, token) for a in self.atoms))

    def display(self) -> str:
        if self.is_false:
            return "false"
        if not self.atoms:
            return "true"
        return " & ".join(atom_display(a) for a in self.atoms)

    def to_formula(self) -> Formula:
        from .core import FALSE

        if self.is_false:
            return FALSE
        return conjoin_formulas([atom_to_formula(a) for a in self.atoms])


TRUE_CORE = FlatCore(False, ())
FALSE_CORE = FlatCore(True, ())


# ---------------------------------------------------------------------------
# Working formulas: the negation tree  ~(exists bound. core & children)
#
# Digests are alpha-canonical: binders bound inside the hashed subtree are
# numbered by (level, position), other variables taken by name.  Equal
# digests therefore mean "equal up to renaming of internal binders", which
# lets the conjunction canonicalizer collapse the alpha-copies rule
# applications produce.


def _walk_digest(n: "WorkingFormula", env: dict, level: int) -> bytes:
    relevant = {v: t for v, t in env.items() if v in n.free_vars}
    if not relevant and level > 0:
        return n.digest
    inner = dict(relevant)
    for i, v in enumerate(n.bound):
        inner[v] = f"%{level}.{i}"
    h = hashlib.md5()
    h.update(str(len(n.bound)).encode())
    h.update(b"|")
    h.update(n.core.render_key(lambda v: inner.get(v) or f"f:{v.name}").encode())
    for part in sorted(_walk_digest(c, inner, level + 1) for c in n.children):
        h.update(b"|")
        h.update(part)
    return h.digest()


@dataclass(frozen=True, eq=False)
class WorkingFormula:
    """One node of a working (or normalized) formula.

    Semantics: ``~(exists bound. core & /\\ children)``.  Children are kept
    canonically sorted and duplicate-free; binder vectors are rank-sorted.
    Instances are immutable and compared by structural digest.
    """

    bound: tuple[Variable, ...]
    core: object
    children: tuple["WorkingFormula", ...]

    @staticmethod
    def make(
        bound: Iterable[Variable], core, children: Iterable["WorkingFormula"] = ()
    ) -> "WorkingFormula":
        bs = tuple(sorted(bound, key=lambda v: v.rank))
        by_digest = {}
        for c in children:
            by_digest.setdefault(c.digest, c)
        kids = tuple(sorted(by_digest.values(), key=lambda c: c.digest))
        return WorkingFormula(bs, core, kids)

    @cached_property
    def digest(self) -> bytes:
        return _walk_digest(self, {}, 0)

    @cached_property
    def depth(self) -> int:
        return 1 + max([0] + [c.depth for c in self.children])

    @cached_property
    def free_vars(self) -> frozenset[Variable]:
        out = set(self.core.variables())
        for c in self.children:
            out |= c.free_vars
        return frozenset(out) - frozenset(self.bound)

    @cached_property
    def node_count(self) -> int:
        return 1 + sum(c.node_count for c in self.children)

    def is_leaf(self) -> bool:
        return not self.children

    def all_binders(self) -> list[Variable]:
        out = list(self.bound)
        for c in self.children:
            out.extend(c.all_binders())
        return out

    def to_formula(self) -> Formula:
        parts = [self.core.to_formula()] + [c.to_formula() for c in self.children]
        return Not(Exists(self.bound, conjoin_formulas(parts)))

    def render(self) -> str:
        names = " ".join(v.name for v in self.bound)
        head = f"ex {names}." if names else "ex ."
        parts = [self.core.display()] + [c.render() for c in self.children]
        return f"~({head} {' & '.join(parts)})"


def refresh_working(
    w: WorkingFormula, mapping: dict[Variable, Variable], session: Session
) -> WorkingFormula:
    """Copy `w`, applying `mapping` to free occurrences and renaming every
    internal binder to a fresh variable (keeps global binder distinctness
    when a subtree is duplicated)."""
    inner = dict(mapping)
    new_bound = []
    for v in w.bound:
        nv = session.fresh(v.name)
        inner[v] = nv
        new_bound.append(nv)
    return WorkingFormula.make(
        new_bound,
        w.core.rename(inner),
        (refresh_working(c, inner, session) for c in w.children),
    )


def depth(w: WorkingFormula) -> int:
    """Nesting depth of a normalized/working formula (minimum 1)."""
    return w.depth


def working_alpha_equal(a: WorkingFormula, b: WorkingFormula) -> bool:
    """Equality modulo binder names and conjunction order (free variables
    are compared by display name)."""
    return a.digest == b.digest


# ---------------------------------------------------------------------------
# Decompositions


@dataclass(frozen=True)
class Decomposition:
    """The three nested quantified blocks of a decomposed core."""

    x_prime: tuple[Variable, ...]
    a_prime: object
    x_dprime: tuple[Variable, ...]
    a_dprime: object
    x_tprime: tuple[Variable, ...]
    a_tprime: object

    def unique_part_trivial(self) -> bool:
        """True when the exactly-one block is `exists () true`."""
        return not self.x_tprime and self.a_tprime.is_true


def check_decompose_precondition(bound: Sequence[Variable], core) -> None:
    bound_set = frozenset(bound)
    if len(bound_set) != len(tuple(bound)):
        raise ValueError("binders must be pairwise distinct")
    free = core.variables() - bound_set
    if bound_set and free:
        lowest = min(v.rank for v in bound_set)
        highest = max(v.rank for v in free)
        if lowest <= highest:
            raise ValueError(
                "binders must outrank the free variables of the quantified core"
            )


# ---------------------------------------------------------------------------
# Plug-in interface


class TheoryPlugin(ABC):
    """Operations a decomposable theory exposes to the engine."""

    name: str
    signature: Signature
    psi_description: str  # prose only; never evaluated

    @abstractmethod
    def flat_to_core(self, flat: FlatCore):
        """Convert a conjunction of flat atoms into an element of A."""

    @abstractmethod
    def conjoin(self, a, b):
        """The conjunction of two cores, canonicalized."""

    @abstractmethod
    def solve_core(self, core):
        """Equivalent (>)-solved core, or the false core."""

    @abstractmethod
    def decompose(self, bound: Sequence[Variable], core) -> Decomposition:
        """Split ``exists bound. core`` into the three nested blocks."""

    @abstractmethod
    def in_a_prime(self, bound: Sequence[Variable], core) -> bool:
        """Purely syntactic membership test for the at-most-one set A'."""

    @abstractmethod
    def in_a_dprime(self, bound: Sequence[Variable], core) -> bool:
        """Membership test for the infinite-instantiation set A''."""

    @abstractmethod
    def in_a_tprime(self, bound: Sequence[Variable], core) -> bool:
        """Membership test for the exactly-one set A'''."""

    def true_core(self):
        return self.flat_to_core(TRUE_CORE)

    def false_core(self):
        return self.flat_to_core(FALSE_CORE)

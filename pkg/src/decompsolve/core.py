"""First-order terms and formulas over a declared signature.

Variables carry a session-wide rank that realizes the strict total order
used by all solved forms: every freshly created variable outranks all
existing ones, so after renaming, quantified variables are automatically
greater than the free variables of any subformula.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class SignatureError(SolverError):
    """Invalid signature declaration or symbol misuse."""


class TheoryError(SolverError):
    """A theory plug-in was fed material outside its signature."""


class ResourceLimitError(SolverError):
    """A configured step/depth/node/time budget was exhausted."""


class InternalInvariantError(SolverError):
    """A structural invariant the engine relies on was violated."""


# ---------------------------------------------------------------------------
# Variables and sessions


@dataclass(frozen=True)
class Variable:
    id: int
    rank: int
    name: str

    def __repr__(self):
        return f"{self.name}#{self.rank}"


class Session:
    """Fresh-variable supply for one solving session.

    A single monotone counter provides both ids and ranks; names are kept
    unique so printed formulas never alias two distinct variables.
    """

    def __init__(self, start: int = 0):
        self._next = start
        self._used_names: set[str] = set()
        self._free: dict[str, Variable] = {}
        self._stem_next: dict[str, int] = {}

    @property
    def counter(self) -> int:
        return self._next

    def _alloc(self, name: str) -> Variable:
        v = Variable(id=self._next, rank=self._next, name=name)
        self._next += 1
        self._used_names.add(name)
        return v

    def var(self, name: str) -> Variable:
        """Return the session's free variable for `name` (interned)."""
        if name not in self._free:
            self._free[name] = self._alloc(name)
        return self._free[name]

    def bound(self, name: str) -> Variable:
        """A new variable for a binder occurrence; shadowing allowed."""
        return self._alloc(name)

    def fresh(self, base: str = "t") -> Variable:
        """A brand-new variable outranking everything created so far."""
        stem = base.rstrip("0123456789") or "t"
        i = self._stem_next.get(stem, 1)
        while f"{stem}{i}" in self._used_names:
            i += 1
        self._stem_next[stem] = i + 1
        return self._alloc(f"{stem}{i}")


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class App:
    fname: str
    args: tuple["Term", ...]

    def __repr__(self):
        if not self.args:
            return self.fname
        return f"{self.fname}({', '.join(map(repr, self.args))})"


Term = Union[Variable, App]


def term_vars(t: Term) -> Iterator[Variable]:
    if isinstance(t, Variable):
        yield t
    else:
        for a in t.args:
            yield from term_vars(a)


def term_size(t: Term) -> int:
    if isinstance(t, Variable):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


# ---------------------------------------------------------------------------
# Formulas (the eleven syntactic forms)


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Exists:
    vars: tuple[Variable, ...]
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    vars: tuple[Variable, ...]
    body: "Formula"


Formula = Union[TrueF, FalseF, Eq, Rel, Not, And, Or, Implies, Iff, Exists, Forall]

TRUE = TrueF()
FALSE = FalseF()

_BINARY = (And, Or, Implies, Iff)
_QUANT = (Exists, Forall)


def free_vars(f: Formula) -> frozenset[Variable]:
    """The variables with at least one free occurrence in `f`."""
    out: set[Variable] = set()

    def walk(g: Formula, scope: frozenset[Variable]):
        if isinstance(g, Eq):
            out.update(v for v in term_vars(g.lhs) if v not in scope)
            out.update(v for v in term_vars(g.rhs) if v not in scope)
        elif isinstance(g, Rel):
            for t in g.args:
                out.update(v for v in term_vars(t) if v not in scope)
        elif isinstance(g, Not):
            walk(g.body, scope)
        elif isinstance(g, _BINARY):
            walk(g.lhs, scope)
            walk(g.rhs, scope)
        elif isinstance(g, _QUANT):
            walk(g.body, scope | frozenset(g.vars))

    walk(f, frozenset())
    return frozenset(out)


def formula_size(f: Formula) -> int:
    """AST node count, terms included."""
    if isinstance(f, (TrueF, FalseF)):
        return 1
    if isinstance(f, Eq):
        return 1 + term_size(f.lhs) + term_size(f.rhs)
    if isinstance(f, Rel):
        return 1 + sum(term_size(t) for t in f.args)
    if isinstance(f, Not):
        return 1 + formula_size(f.body)
    if isinstance(f, _BINARY):
        return 1 + formula_size(f.lhs) + formula_size(f.rhs)
    return 1 + formula_size(f.body)


def quantifier_count(f: Formula) -> int:
    """Total number of quantified variable occurrences."""
    if isinstance(f, Not):
        return quantifier_count(f.body)
    if isinstance(f, _BINARY):
        return quantifier_count(f.lhs) + quantifier_count(f.rhs)
    if isinstance(f, _QUANT):
        return len(f.vars) + quantifier_count(f.body)
    return 0


def _subst_term(t: Term, m: dict[Variable, Variable]) -> Term:
    if isinstance(t, Variable):
        return m.get(t, t)
    return App(t.fname, tuple(_subst_term(a, m) for a in t.args))


def subst_vars(f: Formula, m: dict[Variable, Variable]) -> Formula:
    """Replace free occurrences of variables per `m` (variables only)."""
    if not m:
        return f
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Eq):
        return Eq(_subst_term(f.lhs, m), _subst_term(f.rhs, m))
    if isinstance(f, Rel):
        return Rel(f.name, tuple(_subst_term(t, m) for t in f.args))
    if isinstance(f, Not):
        return Not(subst_vars(f.body, m))
    if isinstance(f, _BINARY):
        return type(f)(subst_vars(f.lhs, m), subst_vars(f.rhs, m))
    inner = {k: v for k, v in m.items() if k not in f.vars}
    return type(f)(f.vars, subst_vars(f.body, inner))


def fresh_rename(f: Formula, session: Session) -> Formula:
    """Alpha-rename every binder to a fresh variable.

    Outer binders are renamed before inner ones, so binder ranks increase
    with nesting depth and all bound variables end up pairwise distinct and
    above every pre-existing rank.
    """

    def walk(g: Formula, env: dict[Variable, Variable]) -> Formula:
        if isinstance(g, (TrueF, FalseF)):
            return g
        if isinstance(g, Eq):
            return Eq(_subst_term(g.lhs, env), _subst_term(g.rhs, env))
        if isinstance(g, Rel):
            return Rel(g.name, tuple(_subst_term(t, env) for t in g.args))
        if isinstance(g, Not):
            return Not(walk(g.body, env))
        if isinstance(g, _BINARY):
            return type(g)(walk(g.lhs, env), walk(g.rhs, env))
        fresh = tuple(session.fresh(v.name) for v in g.vars)
        inner = dict(env)
        inner.update(zip(g.vars, fresh))
        return type(g)(fresh, walk(g.body, inner))

    return walk(f, {})


def alpha_equal(f: Formula, g: Formula) -> bool:
    """Structural equality modulo bound-variable names.

    Free variables are compared by display name, binder vectors
    positionally; conjunction order is *not* abstracted (use the canonical
    normalized/working forms for order-insensitive comparison).
    """

    def tm(a: Term, b: Term, env: dict[Variable, Variable]) -> bool:
        if isinstance(a, Variable) and isinstance(b, Variable):
            if a in env:
                return env[a] == b
            return b not in env.values() and a.name == b.name
        if isinstance(a, App) and isinstance(b, App):
            return (
                a.fname == b.fname
                and len(a.args) == len(b.args)
                and all(tm(x, y, env) for x, y in zip(a.args, b.args))
            )
        return False

    def walk(a: Formula, b: Formula, env: dict[Variable, Variable]) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, (TrueF, FalseF)):
            return True
        if isinstance(a, Eq):
            return tm(a.lhs, b.lhs, env) and tm(a.rhs, b.rhs, env)
        if isinstance(a, Rel):
            return (
                a.name == b.name
                and len(a.args) == len(b.args)
                and all(tm(x, y, env) for x, y in zip(a.args, b.args))
            )
        if isinstance(a, Not):
            return walk(a.body, b.body, env)
        if isinstance(a, _BINARY):
            return walk(a.lhs, b.lhs, env) and walk(a.rhs, b.rhs, env)
        if len(a.vars) != len(b.vars):
            return False
        inner = dict(env)
        inner.update(zip(a.vars, b.vars))
        return walk(a.body, b.body, inner)

    return walk(f, g, {})


# ---------------------------------------------------------------------------
# Signatures


_RA_FUNCTIONS = (("+", 2), ("-", 1), ("0", 0), ("1", 0))


@dataclass(frozen=True)
class Signature:
    theory: str
    functions: tuple[tuple[str, int], ...] = ()
    relations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.theory not in ("eq", "ra", "trees"):
            raise SignatureError(f"unknown theory tag {self.theory!r}")
        seen: set[str] = set()
        for name, arity in self.functions + self.relations:
            if arity < 0:
                raise SignatureError(f"negative arity for {name!r}")
            if name in seen:
                raise SignatureError(f"duplicate symbol {name!r}")
            seen.add(name)
        if self.theory == "eq" and (self.functions or self.relations):
            raise SignatureError("eq admits no function or relation symbols")
        if self.theory == "ra":
            if tuple(sorted(self.functions)) != tuple(sorted(_RA_FUNCTIONS)):
                raise SignatureError("ra fixes the symbols +/2 -/1 0/0 1/0")
            if self.relations:
                raise SignatureError("ra admits no relation symbols")
        if self.theory == "trees" and self.relations:
            raise SignatureError("trees admits no relation symbols")

    def fn_arity(self, name: str) -> Optional[int]:
        for n, a in self.functions:
            if n == name:
                return a
        return None

    def rel_arity(self, name: str) -> Optional[int]:
        for n, a in self.relations:
            if n == name:
                return a
        return None


def eq_signature() -> Signature:
    return Signature("eq")


def ra_signature() -> Signature:
    return Signature("ra", functions=_RA_FUNCTIONS)


def trees_signature(functions: Iterable[tuple[str, int]]) -> Signature:
    return Signature("trees", functions=tuple(functions))


# ---------------------------------------------------------------------------
# Flat atoms and canonical conjunctions


@dataclass(frozen=True)
class TrueAtom:
    pass


@dataclass(frozen=True)
class FalseAtom:
    pass


@dataclass(frozen=True)
class VarEq:
    lhs: Variable
    rhs: Variable


@dataclass(frozen=True)
class AppEq:
    lhs: Variable
    fname: str
    args: tuple[Variable, ...]


@dataclass(frozen=True)
class RelAtom:
    name: str
    args: tuple[Variable, ...]


FlatAtom = Union[TrueAtom, FalseAtom, VarEq, AppEq, RelAtom]

TRUE_ATOM = TrueAtom()
FALSE_ATOM = FalseAtom()


def atom_vars(a: FlatAtom) -> tuple[Variable, ...]:
    if isinstance(a, VarEq):
        return (a.lhs, a.rhs)
    if isinstance(a, (AppEq, RelAtom)):
        return ((a.lhs,) + a.args) if isinstance(a, AppEq) else a.args
    return ()


def atom_rename(a: FlatAtom, m: dict[Variable, Variable]) -> FlatAtom:
    if isinstance(a, VarEq):
        return VarEq(m.get(a.lhs, a.lhs), m.get(a.rhs, a.rhs))
    if isinstance(a, AppEq):
        return AppEq(m.get(a.lhs, a.lhs), a.fname, tuple(m.get(v, v) for v in a.args))
    if isinstance(a, RelAtom):
        return RelAtom(a.name, tuple(m.get(v, v) for v in a.args))
    return a


def atom_sort_key(a: FlatAtom):
    if isinstance(a, TrueAtom):
        return (0,)
    if isinstance(a, FalseAtom):
        return (1,)
    if isinstance(a, VarEq):
        return (2, a.lhs.rank, a.rhs.rank)
    if isinstance(a, AppEq):
        return (3, a.lhs.rank, a.fname, tuple(v.rank for v in a.args))
    return (4, a.name, tuple(v.rank for v in a.args))


def atom_render(a: FlatAtom, token: Callable[[Variable], str]) -> str:
    if isinstance(a, TrueAtom):
        return "true"
    if isinstance(a, FalseAtom):
        return "false"
    if isinstance(a, VarEq):
        return f"{token(a.lhs)}={token(a.rhs)}"
    if isinstance(a, AppEq):
        return f"{token(a.lhs)}={a.fname}({','.join(token(v) for v in a.args)})"
    return f"{a.name}({','.join(token(v) for v in a.args)})"


def atom_to_formula(a: FlatAtom) -> Formula:
    if isinstance(a, TrueAtom):
        return TRUE
    if isinstance(a, FalseAtom):
        return FALSE
    if isinstance(a, VarEq):
        return Eq(a.lhs, a.rhs)
    if isinstance(a, AppEq):
        return Eq(a.lhs, App(a.fname, a.args))
    return Rel(a.name, a.args)


def canonical_conjunction(items, sort_key, is_unit) -> tuple:
    """Canonicalize a conjunction multiset.

    Drops unit members, removes duplicates, and sorts by `sort_key`; the
    empty result stands for `true`.
    """
    kept = {}
    for it in items:
        if is_unit(it):
            continue
        kept.setdefault(sort_key(it), it)
    return tuple(kept[k] for k in sorted(kept))


def conjoin_formulas(parts: Iterable[Formula]) -> Formula:
    """Right-nested conjunction of `parts`; empty input yields `true`."""
    parts = [p for p in parts if not isinstance(p, TrueF)]
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out

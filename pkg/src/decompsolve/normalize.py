"""Normalization: arbitrary formulas into the canonical negation tree.

The pipeline (each step public for testing):

  1. flatten        -- flat atoms only, via extra existential variables
  2. to_core        -- only ~, & and exists as logical material
  3. ensure_negated -- prepend ~(exists []. true & ~ .) when needed
  4. fresh_rename   -- distinct binders above all free ranks
  5. lift_conj      -- pull existentials out of conjunctions
  6. group_vectors  -- merge nested existentials into one vector
  7. insert_units   -- add the missing `exists []`/`true` fillers

after which the formula reads directly as a tree of nodes
``~(exists xs. flat-conjunction & children)``.
"""
from __future__ import annotations

from typing import Iterable

from .core import (
    And,
    App,
    AppEq,
    Eq,
    Exists,
    FALSE_ATOM,
    FalseF,
    Forall,
    Formula,
    Iff,
    Implies,
    InternalInvariantError,
    Not,
    Or,
    Rel,
    RelAtom,
    Session,
    TRUE,
    TRUE_ATOM,
    TrueF,
    VarEq,
    Variable,
    conjoin_formulas,
    fresh_rename,
)
from .theory import FlatCore, TheoryPlugin, WorkingFormula

NormalizedFormula = WorkingFormula  # cores are FlatCore conjunctions here

_BINARY = (And, Or, Implies, Iff)


# -- step 1 ------------------------------------------------------------


def flatten(f: Formula, session: Session) -> Formula:
    """Equivalent formula whose atoms are all flat."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Eq):
        return _flatten_eq(f, session)
    if isinstance(f, Rel):
        news: list[Variable] = []
        atoms: list[Formula] = []
        args = tuple(_flat_arg(a, session, news, atoms) for a in f.args)
        return _wrap(news, [Rel(f.name, args)] + atoms)
    if isinstance(f, Not):
        return Not(flatten(f.body, session))
    if isinstance(f, _BINARY):
        return type(f)(flatten(f.lhs, session), flatten(f.rhs, session))
    return type(f)(f.vars, flatten(f.body, session))


def _flatten_eq(f: Eq, session: Session) -> Formula:
    lhs, rhs = f.lhs, f.rhs
    if isinstance(lhs, App) and isinstance(rhs, Variable):
        lhs, rhs = rhs, lhs
    news: list[Variable] = []
    atoms: list[Formula] = []
    if isinstance(lhs, Variable) and isinstance(rhs, Variable):
        return Eq(lhs, rhs)
    if isinstance(lhs, Variable):
        _flatten_app(lhs, rhs, session, news, atoms)
        return _wrap(news, atoms)
    u = session.fresh()
    news.append(u)
    _flatten_app(u, lhs, session, news, atoms)
    _flatten_app(u, rhs, session, news, atoms)
    return _wrap(news, atoms)


def _flatten_app(x: Variable, t: App, session: Session, news, atoms) -> None:
    pending: list[tuple[Variable, App]] = []
    args = []
    for a in t.args:
        if isinstance(a, Variable):
            args.append(a)
        else:
            v = session.fresh()
            news.append(v)
            args.append(v)
            pending.append((v, a))
    atoms.append(Eq(x, App(t.fname, tuple(args))))
    for v, a in pending:
        _flatten_app(v, a, session, news, atoms)


def _flat_arg(a, session: Session, news, atoms) -> Variable:
    if isinstance(a, Variable):
        return a
    v = session.fresh()
    news.append(v)
    _flatten_app(v, a, session, news, atoms)
    return v


def _wrap(news: list[Variable], atoms: list[Formula]) -> Formula:
    body = conjoin_formulas(atoms)
    return Exists(tuple(news), body) if news else body


# -- step 2 ------------------------------------------------------------


def _not(f: Formula) -> Formula:
    """Negation with double negations collapsed (sound in every theory)."""
    return f.body if isinstance(f, Not) else Not(f)


def to_core(f: Formula) -> Formula:
    """Express the formula with ~, & and exists only."""
    if isinstance(f, (TrueF, FalseF, Eq, Rel)):
        return f
    if isinstance(f, Not):
        return _not(to_core(f.body))
    if isinstance(f, And):
        return And(to_core(f.lhs), to_core(f.rhs))
    if isinstance(f, Or):
        return _not(And(_not(to_core(f.lhs)), _not(to_core(f.rhs))))
    if isinstance(f, Implies):
        return _not(And(to_core(f.lhs), _not(to_core(f.rhs))))
    if isinstance(f, Iff):
        a, b = to_core(f.lhs), to_core(f.rhs)
        return And(_not(And(a, _not(b))), _not(And(b, _not(a))))
    if isinstance(f, Forall):
        return _not(Exists(f.vars, _not(to_core(f.body))))
    return Exists(f.vars, to_core(f.body))


# -- step 3 ------------------------------------------------------------


def ensure_negated(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f
    return Not(Exists((), And(TRUE, Not(f))))


# -- steps 5 and 6 -----------------------------------------------------


def _and_list(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _and_list(f.lhs) + _and_list(f.rhs)
    return [f]


def lift_conj(f: Formula) -> Formula:
    """Pull existential quantifiers out of conjunctions (binders are
    already distinct from everything, so no capture is possible)."""
    if isinstance(f, Not):
        return Not(lift_conj(f.body))
    if isinstance(f, Exists):
        return Exists(f.vars, lift_conj(f.body))
    if isinstance(f, And):
        prefix: list[tuple[Variable, ...]] = []
        parts = []
        for p in map(lift_conj, _and_list(f)):
            while isinstance(p, Exists):
                prefix.append(p.vars)
                p = p.body
            parts.extend(_and_list(p))
        out = conjoin_formulas(parts) if parts else TRUE
        for vs in reversed(prefix):
            out = Exists(vs, out)
        return out
    return f


def group_vectors(f: Formula) -> Formula:
    if isinstance(f, Not):
        return Not(group_vectors(f.body))
    if isinstance(f, And):
        return And(group_vectors(f.lhs), group_vectors(f.rhs))
    if isinstance(f, Exists):
        vars_ = list(f.vars)
        body = f.body
        while isinstance(body, Exists):
            vars_.extend(body.vars)
            body = body.body
        return Exists(tuple(vars_), group_vectors(body))
    return f


# -- step 7 ------------------------------------------------------------


def insert_units(f: Formula) -> Formula:
    """Insert the empty vectors and `true` conjuncts the canonical shape
    requires, innermost negations first."""
    if not isinstance(f, Not):
        raise InternalInvariantError("normalization reached step 7 without a negation root")
    body = f.body
    if isinstance(body, Exists):
        return Not(Exists(body.vars, _fix_conj(body.body)))
    return Not(Exists((), _fix_conj(body)))


def _fix_conj(body: Formula) -> Formula:
    atoms: list[Formula] = []
    negs: list[Formula] = []
    for p in _and_list(body):
        if isinstance(p, Not):
            negs.append(insert_units(p))
        elif isinstance(p, (TrueF, FalseF, Eq, Rel)):
            atoms.append(p)
        else:
            raise InternalInvariantError(f"unexpected conjunct shape: {type(p).__name__}")
    if not atoms:
        atoms = [TRUE]
    return conjoin_formulas(atoms + negs)


# -- reading the canonical shape ---------------------------------------


def _read_atom(f: Formula):
    if isinstance(f, TrueF):
        return TRUE_ATOM
    if isinstance(f, FalseF):
        return FALSE_ATOM
    if isinstance(f, Eq) and isinstance(f.lhs, Variable):
        if isinstance(f.rhs, Variable):
            return VarEq(f.lhs, f.rhs)
        if isinstance(f.rhs, App) and all(isinstance(a, Variable) for a in f.rhs.args):
            return AppEq(f.lhs, f.rhs.fname, f.rhs.args)
    if isinstance(f, Rel) and all(isinstance(a, Variable) for a in f.args):
        return RelAtom(f.name, tuple(f.args))
    raise InternalInvariantError(f"not a flat atom: {f!r}")


def read_normalized(f: Formula) -> NormalizedFormula:
    """Interpret a formula already in canonical shape as a node tree."""
    if not (isinstance(f, Not) and isinstance(f.body, Exists)):
        raise InternalInvariantError("normalized formulas start with ~(ex ...)")
    atoms = []
    children = []
    for p in _and_list(f.body.body):
        if isinstance(p, Not):
            children.append(read_normalized(p))
        else:
            atoms.append(_read_atom(p))
    return WorkingFormula.make(f.body.vars, FlatCore.of(atoms), children)


# -- the full pipeline -------------------------------------------------


def normalize(f: Formula, session: Session) -> NormalizedFormula:
    """Equivalent normalized formula with no new free variables."""
    g = flatten(f, session)
    g = to_core(g)
    g = ensure_negated(g)
    g = fresh_rename(g, session)
    g = lift_conj(g)
    g = group_vectors(g)
    g = insert_units(g)
    return read_normalized(g)


def to_working(n: NormalizedFormula, theory: TheoryPlugin) -> WorkingFormula:
    """Replace each flat conjunction by its image in the theory's A-set."""
    return WorkingFormula.make(
        n.bound,
        theory.flat_to_core(n.core),
        (to_working(c, theory) for c in n.children),
    )

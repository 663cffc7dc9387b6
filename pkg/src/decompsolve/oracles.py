"""Independent brute-force deciders used to validate the solver.

Nothing here calls the theory plug-ins or the rewriting engine; every
procedure below is a from-scratch decision method of its own (finite-domain
enumeration, exact-rational elimination, ground unification, game search).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional

from .core import (
    And,
    App,
    AppEq,
    Eq,
    Exists,
    FalseF,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Rel,
    SolverError,
    Term,
    TrueF,
    VarEq,
    Variable,
    free_vars,
    quantifier_count,
)

_BINARY = (And, Or, Implies, Iff)
_QUANT = (Exists, Forall)


class OracleError(SolverError):
    pass


# ---------------------------------------------------------------------------
# Equality over an infinite domain: finite-domain enumeration


def eq_oracle(sentence: Formula, domain_size: Optional[int] = None) -> bool:
    """Truth of a sentence with equality as its only material.

    Enumerates over an explicit domain of size (number of quantified
    variables + 1): with q witnesses in play, q+1 individuals leave every
    equality pattern realizable, so the verdict agrees with the infinite
    models.  The adequacy is itself exercised by the test suite (axiom
    instances and a domain-size monotonicity check).
    """
    if free_vars(sentence):
        raise OracleError("eq_oracle needs a sentence (no free variables)")
    size = domain_size if domain_size is not None else quantifier_count(sentence) + 1
    size = max(size, 1)
    domain = range(size)

    def ev(f: Formula, env: dict[Variable, int]) -> bool:
        if isinstance(f, TrueF):
            return True
        if isinstance(f, FalseF):
            return False
        if isinstance(f, Eq):
            if not isinstance(f.lhs, Variable) or not isinstance(f.rhs, Variable):
                raise OracleError("eq admits variable equations only")
            return env[f.lhs] == env[f.rhs]
        if isinstance(f, Rel):
            raise OracleError("eq admits no relation symbols")
        if isinstance(f, Not):
            return not ev(f.body, env)
        if isinstance(f, And):
            return ev(f.lhs, env) and ev(f.rhs, env)
        if isinstance(f, Or):
            return ev(f.lhs, env) or ev(f.rhs, env)
        if isinstance(f, Implies):
            return (not ev(f.lhs, env)) or ev(f.rhs, env)
        if isinstance(f, Iff):
            return ev(f.lhs, env) == ev(f.rhs, env)
        if not f.vars:
            return ev(f.body, env)
        v, rest = f.vars[0], f.vars[1:]
        shell = type(f)(rest, f.body)
        if isinstance(f, Exists):
            return any(ev(shell, {**env, v: i}) for i in domain)
        return all(ev(shell, {**env, v: i}) for i in domain)

    return ev(sentence, {})


# ---------------------------------------------------------------------------
# Additive rationals: exact elimination with Fractions

# Linear forms are (coeffs: dict var -> Fraction, const: Fraction).


def _lin_of_term(t: Term):
    if isinstance(t, Variable):
        return {t: Fraction(1)}, Fraction(0)
    if t.fname == "0":
        return {}, Fraction(0)
    if t.fname == "1":
        return {}, Fraction(1)
    if t.fname == "-" and len(t.args) == 1:
        c, k = _lin_of_term(t.args[0])
        return {v: -x for v, x in c.items()}, -k
    if t.fname == "+" and len(t.args) == 2:
        c1, k1 = _lin_of_term(t.args[0])
        c2, k2 = _lin_of_term(t.args[1])
        out = dict(c1)
        for v, x in c2.items():
            out[v] = out.get(v, Fraction(0)) + x
        return {v: x for v, x in out.items() if x != 0}, k1 + k2
    raise OracleError(f"not an additive-rationals term: {t!r}")


def _lin_sub(a, b):
    c1, k1 = a
    c2, k2 = b
    out = dict(c1)
    for v, x in c2.items():
        out[v] = out.get(v, Fraction(0)) - x
    return {v: x for v, x in out.items() if x != 0}, k1 - k2


# Quantifier-free skeletons are tagged tuples:
#   ("true",) ("false",) ("eq", lin) ("not", t) ("and", t, t) ("or", t, t)

_T = ("true",)
_F = ("false",)


def _atom(lin):
    coeffs, const = lin
    if not coeffs:
        return _T if const == 0 else _F
    return ("eq", lin)


def _neg(t):
    if t == _T:
        return _F
    if t == _F:
        return _T
    return ("not", t)


def _conj(a, b):
    if _F in (a, b):
        return _F
    if a == _T:
        return b
    if b == _T:
        return a
    return ("and", a, b)


def _disj(a, b):
    if _T in (a, b):
        return _T
    if a == _F:
        return b
    if b == _F:
        return a
    return ("or", a, b)


def _dnf(t, sign=True):
    """List of conjunctions of literals (lin, polarity)."""
    tag = t[0]
    if tag == "true":
        return [[]] if sign else []
    if tag == "false":
        return [] if sign else [[]]
    if tag == "eq":
        return [[(t[1], sign)]]
    if tag == "not":
        return _dnf(t[1], not sign)
    if tag == "and" and sign or tag == "or" and not sign:
        left = _dnf(t[1], sign)
        right = _dnf(t[2], sign)
        return [l + r for l in left for r in right]
    return _dnf(t[1], sign) + _dnf(t[2], sign)


def _subst_lin(lin, v, replacement):
    """Replace v by the linear form `replacement` inside lin."""
    coeffs, const = lin
    c = coeffs.get(v)
    if not c:
        return lin
    rc, rk = replacement
    out = {u: x for u, x in coeffs.items() if u is not v and u != v}
    for u, x in rc.items():
        out[u] = out.get(u, Fraction(0)) + c * x
    return {u: x for u, x in out.items() if x != 0}, const + c * rk


def _eliminate(v: Variable, literals):
    """exists v. conj(literals)  ->  conj without v (rationals are infinite,
    so disequations alone never pin v down)."""
    pivot = None
    for lin, pol in literals:
        if pol and lin[0].get(v):
            pivot = (lin, pol)
            break
    if pivot is None:
        return [(lin, pol) for lin, pol in literals if not lin[0].get(v)]
    (coeffs, const), _ = pivot
    c = coeffs[v]
    repl = (
        {u: -x / c for u, x in coeffs.items() if u != v},
        -const / c,
    )
    out = []
    for lin, pol in literals:
        if lin is pivot[0]:
            continue
        out.append((_subst_lin(lin, v, repl), pol))
    return out


def _rebuild(disjuncts):
    out = _F
    for conj in disjuncts:
        c = _T
        ok = True
        for lin, pol in conj:
            a = _atom(lin)
            a = a if pol else _neg(a)
            if a == _F:
                ok = False
                break
            c = _conj(c, a)
        if ok:
            out = _disj(out, c)
    return out


def _qe(f: Formula):
    if isinstance(f, TrueF):
        return _T
    if isinstance(f, FalseF):
        return _F
    if isinstance(f, Eq):
        return _atom(_lin_sub(_lin_of_term(f.lhs), _lin_of_term(f.rhs)))
    if isinstance(f, Rel):
        raise OracleError("additive rationals admit no relation symbols")
    if isinstance(f, Not):
        return _neg(_qe(f.body))
    if isinstance(f, And):
        return _conj(_qe(f.lhs), _qe(f.rhs))
    if isinstance(f, Or):
        return _disj(_qe(f.lhs), _qe(f.rhs))
    if isinstance(f, Implies):
        return _disj(_neg(_qe(f.lhs)), _qe(f.rhs))
    if isinstance(f, Iff):
        a, b = _qe(f.lhs), _qe(f.rhs)
        return _disj(_conj(a, b), _conj(_neg(a), _neg(b)))
    if isinstance(f, Forall):
        return _neg(_qe(Exists(f.vars, Not(f.body))))
    inner = _qe(f.body)
    disjuncts = _dnf(inner)
    for v in f.vars:
        disjuncts = [_eliminate(v, conj) for conj in disjuncts]
    return _rebuild(disjuncts)


def ra_oracle(sentence: Formula) -> bool:
    """Truth over the rationals, by exact-rational quantifier elimination
    (solve an equation for the bound variable and substitute; disequations
    never constrain an existential over an infinite field)."""
    if free_vars(sentence):
        raise OracleError("ra_oracle needs a sentence (no free variables)")
    out = _qe(sentence)
    if out == _T:
        return True
    if out == _F:
        return False
    raise OracleError("elimination left residual material on a sentence")


def ra_sample_check(sentence: Formula, rng, tries: int = 64) -> Optional[bool]:
    """Even dumber check: for purely existential prefixes, try random
    rational witnesses.  Returns True when a witness is found, None when
    inconclusive."""
    vars_: list[Variable] = []
    body = sentence
    while isinstance(body, Exists):
        vars_.extend(body.vars)
        body = body.body
    if quantifier_count(body):
        return None

    def ev(f: Formula, env) -> bool:
        if isinstance(f, TrueF):
            return True
        if isinstance(f, FalseF):
            return False
        if isinstance(f, Eq):
            lc, lk = _lin_of_term(f.lhs)
            rc, rk = _lin_of_term(f.rhs)
            left = sum((env[v] * c for v, c in lc.items()), lk)
            right = sum((env[v] * c for v, c in rc.items()), rk)
            return left == right
        if isinstance(f, Not):
            return not ev(f.body, env)
        if isinstance(f, And):
            return ev(f.lhs, env) and ev(f.rhs, env)
        if isinstance(f, Or):
            return ev(f.lhs, env) or ev(f.rhs, env)
        if isinstance(f, Implies):
            return (not ev(f.lhs, env)) or ev(f.rhs, env)
        return ev(f.lhs, env) == ev(f.rhs, env)

    for _ in range(tries):
        env = {
            v: Fraction(rng.randint(-12, 12), rng.randint(1, 6)) for v in vars_
        }
        if ev(body, env):
            return True
    return None


# ---------------------------------------------------------------------------
# Ground evaluation of solved tree answers


def is_ground_tree(t: Term) -> bool:
    return isinstance(t, App) and all(is_ground_tree(a) for a in t.args)


class _GroundUnifier:
    """Rational-tree unification on flat atoms plus ground bindings.

    No occurs check: a revisited pair of terms is coinductively assumed
    equal, which is exactly equality of the rational trees they denote.
    """

    def __init__(self, binding: dict[Variable, Term]):
        self.subst: dict[Variable, Term] = dict(binding)

    def resolve(self, t: Term) -> Term:
        seen = set()
        while isinstance(t, Variable) and t in self.subst:
            if t in seen:
                return t
            seen.add(t)
            t = self.subst[t]
        return t

    def unify(self, a: Term, b: Term, active: frozenset) -> bool:
        a, b = self.resolve(a), self.resolve(b)
        if a is b or a == b:
            return True
        if isinstance(a, Variable):
            self.subst[a] = b
            return True
        if isinstance(b, Variable):
            self.subst[b] = a
            return True
        key = (id(a), id(b))
        if key in active:
            return True
        if a.fname != b.fname or len(a.args) != len(b.args):
            return False
        nested = active | {key}
        return all(self.unify(x, y, nested) for x, y in zip(a.args, b.args))

    def add_atoms(self, atoms) -> bool:
        for atom in atoms:
            if isinstance(atom, VarEq):
                if not self.unify(atom.lhs, atom.rhs, frozenset()):
                    return False
            elif isinstance(atom, AppEq):
                if not self.unify(atom.lhs, App(atom.fname, atom.args), frozenset()):
                    return False
            else:
                raise OracleError(f"not a tree atom: {atom!r}")
        return True


def _basic_satisfiable(core, binding: dict[Variable, Term]) -> Optional[_GroundUnifier]:
    if core.is_false:
        return None
    u = _GroundUnifier(binding)
    return u if u.add_atoms(core.atoms) else None


def eval_solved_on_ground(answer, binding: dict[Variable, Term]) -> bool:
    """Evaluate a disjunction of solved tree answers at ground positions.

    Each alternative holds iff its positive part unifies under the binding
    and none of its negated parts do (the positive part admits at most one
    witness, so extending the binding with it is sound).
    """
    for t in binding.values():
        if not is_ground_tree(t):
            raise OracleError(f"binding value is not a ground tree: {t!r}")
    for d in answer.disjuncts:
        if frozenset(d.bound) & set(binding):
            raise OracleError("binding collides with quantified variables")
        u = _basic_satisfiable(d.core, binding)
        if u is None:
            continue
        if all(
            _basic_satisfiable(c, u.subst) is None for _, c in d.negs
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# Two-partner games, by direct search


def game1_moves(i: int) -> list[int]:
    return [i - d for d in (1, 2) if i - d >= 0]


def game2_moves(pos: tuple[int, int]) -> list[tuple[int, int]]:
    i, j = pos
    out = []
    if i % 2 == 1:
        out.append((i, j + 1))
    elif j >= 1:
        out.append((i, j - 1))
    if j % 2 == 1:
        out.append((i + 1, j))
    elif i >= 1:
        out.append((i - 1, j))
    return out


def game_brute_force(game: int, k: int, bound: int) -> set:
    """The exact k-winning set over positions within `bound`.

    A position is k-winning when the mover can force a win within k of
    their own moves.  Game 2 moves can leave the reported window, so the
    search runs on a grid widened by 2k before restricting the answer.
    """
    if k < 0:
        raise OracleError("k must be non-negative")
    if game == 1:
        moves = game1_moves
        domain = list(range(bound + 1))
        report = set(domain)
    elif game == 2:
        moves = game2_moves
        wide = bound + 2 * k
        domain = [(i, j) for i in range(wide + 1) for j in range(wide + 1)]
        report = {(i, j) for i in range(bound + 1) for j in range(bound + 1)}
    else:
        raise OracleError(f"unknown game {game}")

    winning: set = set()
    for _ in range(k):
        step = {
            p
            for p in domain
            if any(all(z in winning for z in moves(y)) for y in moves(p))
        }
        if step == winning:
            break
        winning = step
    return winning & report

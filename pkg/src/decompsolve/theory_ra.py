"""Additive rational (or real) numbers with + and -.

Cores are blocks: conjunctions of integer-coefficient linear equations
``a1.x1 + ... + an.xn = a0.1``.  The leader of an equation is its
highest-ranked variable with a nonzero coefficient.  Solving is exact
integer Gaussian elimination on leaders; every stored equation is scaled
so the gcd of its coefficients is 1 and its leader coefficient positive,
making solved blocks canonical and printable bit-exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Callable, Iterable, Optional, Sequence

from .core import (
    App,
    AppEq,
    Eq,
    FalseAtom,
    Formula,
    TheoryError,
    TrueAtom,
    VarEq,
    Variable,
    conjoin_formulas,
    ra_signature,
)
from .theory import Decomposition, FlatCore, TheoryPlugin, check_decompose_precondition


@dataclass(frozen=True)
class LinearEq:
    """sum of coeff*var = const*1, variables ordered by descending rank."""

    coeffs: tuple[tuple[Variable, int], ...]
    const: int

    @property
    def leader(self) -> Variable:
        return self.coeffs[0][0]

    def coeff_of(self, v: Variable) -> int:
        for u, c in self.coeffs:
            if u is v or u == v:
                return c
        return 0

    def variables(self) -> frozenset[Variable]:
        return frozenset(v for v, _ in self.coeffs)

    def render(self, token: Callable[[Variable], str]) -> str:
        if not self.coeffs:
            return f"0 = {self.const}*1"
        lhs = " + ".join(f"{c}*{token(v)}" for v, c in self.coeffs)
        return f"{lhs} = {self.const}*1"

    def to_formula(self) -> Formula:
        return Eq(_monomial_sum([(v, c) for v, c in self.coeffs]), _constant_term(self.const))


def _constant_term(c: int) -> App:
    if c == 0:
        return App("0", ())
    unit = App("1", ())
    return _repeat_sum(unit, c)


def _repeat_sum(t, c: int):
    unit = t if c > 0 else App("-", (t,))
    out = unit
    for _ in range(abs(c) - 1):
        out = App("+", (unit, out))
    return out


def _monomial_sum(pairs):
    parts = [_repeat_sum(v, c) for v, c in pairs]
    if not parts:
        return App("0", ())
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = App("+", (p, out))
    return out


_FALSE = object()  # sentinel for an inconsistent constant equation


def make_linear(coeffs: dict[Variable, int], const: int):
    """Normalize to canonical scale; returns LinearEq, None (true) or the
    false sentinel for 0 = a0.1 with a0 nonzero."""
    items = [(v, c) for v, c in coeffs.items() if c != 0]
    if not items:
        return None if const == 0 else _FALSE
    items.sort(key=lambda vc: -vc[0].rank)
    g = 0
    for _, c in items:
        g = gcd(g, abs(c))
    g = gcd(g, abs(const))
    sign = 1 if items[0][1] > 0 else -1
    scale = sign * g
    return LinearEq(tuple((v, c // scale) for v, c in items), const // scale)


@dataclass(frozen=True)
class RaCore:
    """A block: false marker or a canonical tuple of linear equations."""

    is_false: bool
    eqs: tuple[LinearEq, ...] = ()

    @staticmethod
    def of(eqs: Iterable[Optional[LinearEq]]) -> "RaCore":
        kept = {}
        for e in eqs:
            if e is None:
                continue
            if e is _FALSE:
                return FALSE_BLOCK
            kept.setdefault(_eq_key(e), e)
        return RaCore(False, tuple(kept[k] for k in sorted(kept)))

    @property
    def is_true(self) -> bool:
        return not self.is_false and not self.eqs

    def variables(self) -> frozenset[Variable]:
        out: set[Variable] = set()
        for e in self.eqs:
            out |= e.variables()
        return frozenset(out)

    def rename(self, m: dict[Variable, Variable]) -> "RaCore":
        if self.is_false or not m:
            return self
        return RaCore.of(
            make_linear({m.get(v, v): c for v, c in e.coeffs}, e.const) for e in self.eqs
        )

    def conjoin(self, other: "RaCore") -> "RaCore":
        if self.is_false or other.is_false:
            return FALSE_BLOCK
        return RaCore.of(self.eqs + other.eqs)

    def render_key(self, token: Callable[[Variable], str]) -> str:
        if self.is_false:
            return "false"
        if not self.eqs:
            return "true"
        return "&".join(sorted(e.render(token) for e in self.eqs))

    def display(self) -> str:
        if self.is_false:
            return "false"
        if not self.eqs:
            return "true"
        return " & ".join(e.render(lambda v: v.name) for e in self.eqs)

    def to_formula(self) -> Formula:
        from .core import FALSE

        if self.is_false:
            return FALSE
        return conjoin_formulas([e.to_formula() for e in self.eqs])


def _eq_key(e: LinearEq):
    return (tuple((-v.rank, c) for v, c in e.coeffs), e.const)


TRUE_BLOCK = RaCore(False, ())
FALSE_BLOCK = RaCore(True, ())


def _pivot(kept: LinearEq, target_coeffs: dict[Variable, int], target_const: int):
    """Eliminate kept's leader from the target equation.

    Combination: coefficients become b_k*a_i - a_k*b_i (exact integers),
    where a is the kept equation with leader x_k and b the target.
    """
    xk = kept.leader
    bk = target_coeffs.get(xk, 0)
    if bk == 0:
        return target_coeffs, target_const
    ak = kept.coeff_of(xk)
    out: dict[Variable, int] = {}
    for v, bi in target_coeffs.items():
        out[v] = bk * kept.coeff_of(v) - ak * bi
    for v, ai in kept.coeffs:
        if v not in target_coeffs:
            out[v] = bk * ai
    const = bk * kept.const - ak * target_const
    return out, const


def ra_solve(block: RaCore) -> RaCore:
    """Reduce a block to false or its canonical (>)-solved form."""
    if block.is_false:
        return FALSE_BLOCK
    registry: dict[Variable, LinearEq] = {}
    queue = list(block.eqs)
    while queue:
        eq = queue.pop(0)
        coeffs = dict(eq.coeffs)
        const = eq.const
        changed = True
        while changed:
            changed = False
            for leader, kept in registry.items():
                if coeffs.get(leader, 0) != 0:
                    coeffs, const = _pivot(kept, coeffs, const)
                    changed = True
        norm = make_linear(coeffs, const)
        if norm is None:
            continue
        if norm is _FALSE:
            return FALSE_BLOCK
        leader = norm.leader
        # Re-register: equations mentioning the new leader go back to the
        # queue so each leader ends up in exactly one equation.
        stale = [l for l, e in registry.items() if e.coeff_of(leader) != 0]
        for l in stale:
            queue.append(registry.pop(l))
        registry[leader] = norm
    return RaCore.of(registry.values())


def ra_solved(block: RaCore) -> bool:
    if block.is_false:
        return False
    leaders = set()
    for e in block.eqs:
        if not e.coeffs:
            return False
        if e.leader in leaders:
            return False
        leaders.add(e.leader)
    for e in block.eqs:
        for other in block.eqs:
            if other is e:
                continue
            if other.coeff_of(e.leader) != 0:
                return False
    return True


def ra_decompose(bound: Sequence[Variable], block: RaCore) -> Decomposition:
    check_decompose_precondition(bound, block)
    solved = block if ra_solved(block) or block.is_false else ra_solve(block)
    if solved.is_false:
        return Decomposition((), FALSE_BLOCK, (), TRUE_BLOCK, (), TRUE_BLOCK)
    bound_set = frozenset(bound)
    leaders = {e.leader for e in solved.eqs}
    free_led = RaCore.of(e for e in solved.eqs if e.leader not in bound_set)
    bound_led = RaCore.of(e for e in solved.eqs if e.leader in bound_set)
    x_l = tuple(sorted(bound_set & leaders, key=lambda v: v.rank))
    x_n = tuple(sorted(bound_set - leaders, key=lambda v: v.rank))
    return Decomposition((), free_led, x_n, TRUE_BLOCK, x_l, bound_led)


class RaTheory(TheoryPlugin):
    name = "ra"
    signature = ra_signature()
    psi_description = (
        "Only the formula `false`: 0, 1, 1+1, ... are pairwise distinct, so "
        "every model is infinite and `exists x. true` has infinitely many "
        "witnesses with no exclusions needed."
    )

    def flat_to_core(self, flat: FlatCore) -> RaCore:
        if flat.is_false:
            return FALSE_BLOCK
        eqs = []
        for a in flat.atoms:
            if isinstance(a, TrueAtom):
                continue
            if isinstance(a, FalseAtom):
                return FALSE_BLOCK
            if isinstance(a, VarEq):
                coeffs: dict[Variable, int] = {a.lhs: 1}
                coeffs[a.rhs] = coeffs.get(a.rhs, 0) - 1
                eqs.append(make_linear(coeffs, 0))
            elif isinstance(a, AppEq):
                eqs.append(self._app_equation(a))
            else:
                raise TheoryError(f"foreign atom for ra: {a!r}")
        return RaCore.of(eqs)

    def _app_equation(self, a: AppEq):
        coeffs: dict[Variable, int] = {a.lhs: 1}
        const = 0
        if a.fname == "+":
            for v in a.args:
                coeffs[v] = coeffs.get(v, 0) - 1
        elif a.fname == "-":
            (v,) = a.args
            coeffs[v] = coeffs.get(v, 0) + 1
        elif a.fname == "0":
            pass
        elif a.fname == "1":
            const = 1
        else:
            raise TheoryError(f"foreign function symbol for ra: {a.fname!r}")
        return make_linear(coeffs, const)

    def conjoin(self, a: RaCore, b: RaCore) -> RaCore:
        return a.conjoin(b)

    def solve_core(self, core: RaCore) -> RaCore:
        return ra_solve(core)

    def decompose(self, bound: Sequence[Variable], core: RaCore) -> Decomposition:
        return ra_decompose(bound, core)

    def in_a_prime(self, bound: Sequence[Variable], core: RaCore) -> bool:
        if bound:
            return False
        return core.is_false or ra_solved(core)

    def in_a_dprime(self, bound: Sequence[Variable], core: RaCore) -> bool:
        return core.is_true

    def in_a_tprime(self, bound: Sequence[Variable], core: RaCore) -> bool:
        if not ra_solved(core):
            return False
        return frozenset(bound) == {e.leader for e in core.eqs} and len(
            set(bound)
        ) == len(tuple(bound))

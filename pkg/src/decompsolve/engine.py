"""The rewriting engine: five rules, bottom-up strategy, answer assembly.

solve() reduces a working formula to an equivalent conjunction of solved
formulas.  The strategy is innermost-first: children are fully reduced
before their parent is touched, so distributions (rule 5) always see
solved children and the quantified-block rules (3) and (4) always see
leaves.  Each rule application is counted against the configured limits.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import (
    FALSE,
    Formula,
    InternalInvariantError,
    Not,
    Or,
    ResourceLimitError,
    Session,
    SolverError,
    TRUE,
    Variable,
    conjoin_formulas,
)
from .core import Exists
from .normalize import normalize, to_working
from .theory import Decomposition, TheoryPlugin, WorkingFormula, refresh_working


class MeasureCapError(SolverError):
    """The termination measure is tower-exponential; past the cap it is
    skipped rather than computed."""


@dataclass
class Limits:
    max_steps: int = 10_000_000
    max_depth: int = 64
    max_nodes: int = 100_000_000
    max_seconds: Optional[float] = None


@dataclass
class SolveStats:
    rule_counts: dict = field(default_factory=lambda: {1: 0, 2: 0, 3: 0, 4: 0, 5: 0})
    steps: int = 0
    nodes_created: int = 0
    wall_seconds: float = 0.0


@dataclass(frozen=True)
class TraceStep:
    step: int
    rule: int
    path: tuple[int, ...]
    before: str
    after: str


@dataclass
class SolveResult:
    solved: tuple[WorkingFormula, ...]
    stats: SolveStats
    trace: Optional[list[TraceStep]] = None

    def render(self) -> str:
        if not self.solved:
            return "true"
        return " & ".join(w.render() for w in self.solved)


def debug_enabled() -> bool:
    return os.environ.get("DECOMP_DEBUG_MEASURE", "") == "1"


# ---------------------------------------------------------------------------
# Solved-form recognition


def is_solved(w: WorkingFormula, theory: TheoryPlugin) -> bool:
    if w.core.is_false or not theory.in_a_prime(w.bound, w.core):
        return False
    for c in w.children:
        if c.children:
            return False
        if c.core.is_true or c.core.is_false:
            return False
        if not theory.in_a_prime(c.bound, c.core):
            return False
    return True


# ---------------------------------------------------------------------------
# The termination measure (debug assertions only)

_EXP_BIT_CAP = 1 << 20


def _guarded_pow2(e: int) -> int:
    if e > _EXP_BIT_CAP:
        raise MeasureCapError("2^e exceeds the computable range")
    return 1 << e


def _guarded_pow4(e: int) -> int:
    if 2 * e > _EXP_BIT_CAP:
        raise MeasureCapError("4^e exceeds the computable range")
    return 1 << (2 * e)


def _alpha(w: WorkingFormula) -> int:
    return _guarded_pow2(sum(_alpha(c) for c in w.children))


def _beta(w: WorkingFormula, theory: TheoryPlugin) -> int:
    inner = 1 + sum(_beta(c, theory) for c in w.children)
    if all(c.is_leaf() for c in w.children):
        d = theory.decompose(w.bound, w.core)
        if not d.unique_part_trivial():
            return _guarded_pow4(inner)
    return inner


def _count_outside_a_prime(w: WorkingFormula, theory: TheoryPlugin) -> int:
    own = 0 if theory.in_a_prime(w.bound, w.core) else 1
    return own + sum(_count_outside_a_prime(c, theory) for c in w.children)


def debug_measure(
    w: WorkingFormula, theory: TheoryPlugin, depth_cap: int = 12
) -> tuple[int, int, int]:
    """(n1, n2, n3): strictly lexicographically decreasing per rule."""
    if w.depth > depth_cap:
        raise MeasureCapError(f"depth {w.depth} exceeds the measure cap {depth_cap}")
    return (_alpha(w), _beta(w, theory), _count_outside_a_prime(w, theory))


def _measure_conj(ws: Sequence[WorkingFormula], theory: TheoryPlugin, cap: int):
    out = (0, 0, 0)
    for w in ws:
        m = debug_measure(w, theory, cap)
        out = (out[0] + m[0], out[1] + m[1], out[2] + m[2])
    return out


# ---------------------------------------------------------------------------
# Rule primitives shared by the driver and the single-step interface


def _rule3_pieces(
    bound, core, kids, d: Decomposition, theory: TheoryPlugin, session: Session
):
    new_bound = d.x_prime + d.x_dprime
    new_core = theory.conjoin(d.a_prime, d.a_dprime)
    new_kids = []
    for k in kids:
        # The renaming covers the whole child (exists x''' y_i. a''' & b_i):
        # b_i's occurrences of the x''' variables are bound there too.
        m = {v: session.fresh(v.name) for v in d.x_tprime}
        new_kids.append(
            WorkingFormula.make(
                tuple(m.values()) + k.bound,
                theory.conjoin(d.a_tprime.rename(m), k.core.rename(m)),
                (),
            )
        )
    return new_bound, new_core, new_kids


def _rule5_pieces(bound, core, kids, target, theory: TheoryPlugin, session: Session):
    others = [k for k in kids if k is not target]
    leafed = WorkingFormula.make(target.bound, target.core, ())
    piece_a = (bound, core, others + [leafed])
    copies = []
    for g in target.children:
        m = {v: session.fresh(v.name) for v in bound + target.bound}
        copy_others = [refresh_working(o, m, session) for o in others]
        copy_bound = tuple(m.values()) + g.bound
        copy_core = theory.conjoin(
            theory.conjoin(core.rename(m), target.core.rename(m)), g.core.rename(m)
        )
        copies.append((copy_bound, copy_core, copy_others))
    return piece_a, copies


# ---------------------------------------------------------------------------
# The driver


class _Solver:
    def __init__(
        self,
        theory: TheoryPlugin,
        session: Session,
        limits: Limits,
        want_trace: bool = False,
    ):
        self.theory = theory
        self.session = session
        self.limits = limits
        self.stats = SolveStats()
        self.trace: Optional[list[TraceStep]] = [] if want_trace else None
        self.debug = debug_enabled()
        self.t0 = time.monotonic()

    def _tick(self, rule: int, path, before=None, after=None) -> None:
        self.stats.rule_counts[rule] += 1
        self.stats.steps += 1
        if self.stats.steps > self.limits.max_steps:
            raise ResourceLimitError(f"step limit {self.limits.max_steps} exhausted")
        if self.limits.max_seconds is not None and self.stats.steps % 64 == 0:
            if time.monotonic() - self.t0 > self.limits.max_seconds:
                raise ResourceLimitError(f"time limit {self.limits.max_seconds}s exhausted")
        if self.trace is not None:
            self.trace.append(
                TraceStep(self.stats.steps, rule, tuple(path), before or "", after or "")
            )

    def _made(self, *nodes: WorkingFormula) -> None:
        self.stats.nodes_created += sum(n.node_count for n in nodes)
        if self.stats.nodes_created > self.limits.max_nodes:
            raise ResourceLimitError(f"node budget {self.limits.max_nodes} exhausted")

    def _snap(self, bound, core, kids) -> WorkingFormula:
        return WorkingFormula.make(bound, core, kids)

    def _check_step(self, before_node, after_nodes, rule) -> None:
        if not self.debug:
            return
        binders = []
        for n in after_nodes:
            binders.extend(n.all_binders())
        if len(binders) != len(set(binders)):
            raise InternalInvariantError(f"rule {rule} duplicated a binder")
        try:
            m0 = _measure_conj([before_node], self.theory, 12)
            m1 = _measure_conj(after_nodes, self.theory, 12)
        except MeasureCapError:
            return
        if not m1 < m0:
            raise InternalInvariantError(
                f"rule {rule} did not decrease the measure: {m0} -> {m1}"
            )

    def reduce(self, node: WorkingFormula, path: tuple[int, ...] = ()) -> list[WorkingFormula]:
        """The conjunction of solved formulas equivalent to `node`."""
        if node.depth > self.limits.max_depth:
            raise ResourceLimitError(f"depth limit {self.limits.max_depth} exhausted")
        theory = self.theory
        slow = self.debug or self.trace is not None
        results: list[WorkingFormula] = []
        work: list[tuple] = [(node.bound, node.core, tuple(node.children), True)]
        while work:
            bound, core, kids, kids_raw = work.pop()
            if core.is_false:
                snap = self._snap(bound, core, kids) if slow else None
                self._tick(2, path, snap.render() if snap else None, "true")
                if snap is not None:
                    self._check_step(snap, [], 2)
                continue
            if kids_raw:
                reduced: list[WorkingFormula] = []
                for i, c in enumerate(sorted(kids, key=lambda k: k.digest)):
                    pieces = self.reduce(c, path + (i,))
                    reduced.extend(pieces)
                    if any(p.core.is_true and not p.children for p in pieces):
                        break  # rule 1 will fire; siblings are moot
                kids = tuple(reduced)
            if any(k.core.is_true and not k.children for k in kids):
                snap = self._snap(bound, core, kids) if slow else None
                self._tick(1, path, snap.render() if snap else None, "true")
                if snap is not None:
                    self._check_step(snap, [], 1)
                continue
            deep = [k for k in sorted(kids, key=lambda k: k.digest) if k.children]
            if deep:
                snap = self._snap(bound, core, kids) if slow else None
                piece_a, copies = _rule5_pieces(bound, core, kids, deep[0], theory, self.session)
                self._tick(5, path, snap.render() if snap else None, f"{1 + len(copies)} pieces")
                if snap is not None:
                    pieces = [self._snap(*piece_a)] + [self._snap(*c) for c in copies]
                    self._check_step(snap, pieces, 5)
                for b, a, ks in reversed(copies):
                    work.append((b, a, tuple(ks), False))
                work.append((piece_a[0], piece_a[1], tuple(piece_a[2]), False))
                continue
            d = theory.decompose(bound, core)
            if not d.unique_part_trivial():
                snap = self._snap(bound, core, kids) if slow else None
                nb, nc, nk = _rule3_pieces(bound, core, kids, d, theory, self.session)
                self._made(*nk)
                after = self._snap(nb, nc, nk) if slow else None
                self._tick(3, path, snap.render() if snap else None, after.render() if after else None)
                if snap is not None:
                    self._check_step(snap, [after], 3)
                work.append((nb, nc, tuple(nk), True))
                continue
            if theory.in_a_prime(bound, core):
                out = WorkingFormula.make(bound, core, kids)
                self._made(out)
                if self.debug and not is_solved(out, theory):
                    raise InternalInvariantError(
                        f"fixpoint member fails the solved-form test: {out.render()}"
                    )
                results.append(out)
                continue
            snap = self._snap(bound, core, kids) if slow else None
            x2 = frozenset(d.x_dprime)
            if d.a_prime.is_false:
                keep = ()  # false absorbs the children outright
            else:
                keep = tuple(k for k in kids if not (k.free_vars & x2))
            after = self._snap(d.x_prime, d.a_prime, keep) if slow else None
            self._tick(4, path, snap.render() if snap else None, after.render() if after else None)
            if snap is not None:
                self._check_step(snap, [after], 4)
            work.append((d.x_prime, d.a_prime, keep, False))
        return results


def check_working(w: WorkingFormula, theory: TheoryPlugin) -> None:
    """Validate the working-formula invariants (binders and core types)."""
    binders = w.all_binders()
    if len(binders) != len(set(binders)):
        raise InternalInvariantError("quantified variables are not pairwise distinct")
    if set(binders) & w.free_vars:
        raise InternalInvariantError("a bound variable also occurs free")

    def walk(n: WorkingFormula):
        theory.conjoin(n.core, theory.true_core())  # raises on a foreign core type
        for c in n.children:
            walk(c)

    walk(w)


def solve(
    w: WorkingFormula,
    theory: TheoryPlugin,
    session: Session,
    limits: Optional[Limits] = None,
    want_trace: bool = False,
) -> SolveResult:
    """Apply the rewriting rules to a fixpoint conjunction of solved forms."""
    limits = limits or Limits()
    check_working(w, theory)
    solver = _Solver(theory, session, limits, want_trace)
    t0 = time.monotonic()
    members = solver.reduce(w)
    by_digest = {}
    for m in members:
        by_digest.setdefault(m.digest, m)
    solved = tuple(sorted(by_digest.values(), key=lambda m: m.digest))
    for m in solved:
        if not is_solved(m, theory):
            raise InternalInvariantError(f"unsolved member at fixpoint: {m.render()}")
    solver.stats.wall_seconds = time.monotonic() - t0
    return SolveResult(solved, solver.stats, solver.trace)


# ---------------------------------------------------------------------------
# Single-step application (testing / tracing interface)


def apply_rule(
    w: WorkingFormula,
    at: tuple[int, ...],
    theory: TheoryPlugin,
    session: Session,
) -> Optional[tuple[int, list[WorkingFormula]]]:
    """Try the rules in order at the addressed subformula.

    Returns (rule-number, replacement conjunction) or None when no rule
    applies there; the empty conjunction stands for `true`.  Child indices
    address the canonically sorted children tuples.
    """
    if at:
        i = at[0]
        if i >= len(w.children):
            raise IndexError(f"no child {i} at this node")
        res = apply_rule(w.children[i], at[1:], theory, session)
        if res is None:
            return None
        rule, repl = res
        kids = w.children[:i] + w.children[i + 1 :] + tuple(repl)
        return rule, [WorkingFormula.make(w.bound, w.core, kids)]
    return _try_rules(w, theory, session)


def _try_rules(w: WorkingFormula, theory: TheoryPlugin, session: Session):
    for k in w.children:
        if k.core.is_true and not k.children:
            return 1, []
    if w.core.is_false:
        return 2, []
    if all(k.is_leaf() for k in w.children):
        d = theory.decompose(w.bound, w.core)
        if not d.unique_part_trivial():
            nb, nc, nk = _rule3_pieces(w.bound, w.core, w.children, d, theory, session)
            return 3, [WorkingFormula.make(nb, nc, nk)]
        kids_prime = all(theory.in_a_prime(k.bound, k.core) for k in w.children)
        if kids_prime and not theory.in_a_prime(w.bound, w.core):
            x2 = frozenset(d.x_dprime)
            if d.a_prime.is_false:
                keep: tuple = ()
            else:
                keep = tuple(k for k in w.children if not (k.free_vars & x2))
            return 4, [WorkingFormula.make(d.x_prime, d.a_prime, keep)]
        return None
    for target in w.children:
        if not target.children:
            continue
        if not theory.in_a_prime(target.bound, target.core):
            continue
        if not all(
            g.is_leaf() and theory.in_a_prime(g.bound, g.core) for g in target.children
        ):
            continue
        piece_a, copies = _rule5_pieces(w.bound, w.core, w.children, target, theory, session)
        out = [WorkingFormula.make(*piece_a)]
        out.extend(WorkingFormula.make(b, c, ks) for b, c, ks in copies)
        return 5, out
    return None


# ---------------------------------------------------------------------------
# Final answers


def finalize_closed(result: SolveResult) -> Formula:
    """`true` or `~true`, for inputs that had no free variables."""
    frees = set()
    for m in result.solved:
        frees |= m.free_vars
    if frees:
        raise SolverError(f"finalize_closed on an open formula (free: {sorted(v.name for v in frees)})")
    if not result.solved:
        return TRUE
    return Not(TRUE)


def closed_verdict(result: SolveResult) -> bool:
    return not isinstance(finalize_closed(result), Not)


@dataclass(frozen=True)
class Disjunct:
    """One positive alternative: exists bound. core & /\\ ~(exists b. c)."""

    bound: tuple[Variable, ...]
    core: object
    negs: tuple[tuple[tuple[Variable, ...], object], ...]

    def to_formula(self) -> Formula:
        parts = [self.core.to_formula()]
        parts += [Not(Exists(b, c.to_formula())) for b, c in self.negs]
        return Exists(self.bound, conjoin_formulas(parts))

    def render(self) -> str:
        names = " ".join(v.name for v in self.bound)
        head = f"ex {names}." if names else "ex ."
        bits = [self.core.display()]
        for b, c in self.negs:
            inner_names = " ".join(v.name for v in b)
            inner_head = f"ex {inner_names}." if inner_names else "ex ."
            bits.append(f"~({inner_head} {c.display()})")
        return f"({head} {' & '.join(bits)})"


@dataclass(frozen=True)
class Answer:
    """Disjunction of solved alternatives, equivalent to the query."""

    disjuncts: tuple[Disjunct, ...]
    stats: SolveStats

    def to_formula(self) -> Formula:
        if not self.disjuncts:
            return FALSE
        out = self.disjuncts[-1].to_formula()
        for d in reversed(self.disjuncts[:-1]):
            out = Or(d.to_formula(), out)
        return out

    def render(self) -> str:
        if not self.disjuncts:
            return "false"
        return " | ".join(d.render() for d in self.disjuncts)


def present_solutions(
    psi: Formula,
    theory: TheoryPlugin,
    session: Session,
    limits: Optional[Limits] = None,
) -> Answer:
    """Solve ~psi and read the answers positively, as a disjunction."""
    n = normalize(Not(psi), session)
    w = to_working(n, theory)
    result = solve(w, theory, session, limits)
    out = []
    for m in result.solved:
        negs = tuple((c.bound, c.core) for c in m.children)
        out.append(Disjunct(m.bound, m.core, negs))
    return Answer(tuple(out), result.stats)

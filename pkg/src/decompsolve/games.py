"""The two-partner games: formula generation, encoding, benchmark harness.

Game 1 is the subtraction game on naturals (take 1 or 2); game 2 is the
parity game on pairs (pick a component; its parity decides whether the
other grows or shrinks by one).  Positions are coded as trees; asking for
the k-winning positions means solving a formula with 2k alternated
quantifier blocks over the tree theory.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    And,
    App,
    Eq,
    Exists,
    FALSE,
    Formula,
    Not,
    Or,
    ResourceLimitError,
    Session,
    Signature,
    SolverError,
    Term,
    Variable,
    trees_signature,
)
from .engine import Answer, Limits, present_solutions
from .oracles import eval_solved_on_ground, game_brute_force
from .theory_trees import TreesTheory

GAME1_SIGNATURE = trees_signature([("0", 0), ("s", 1)])
GAME2_SIGNATURE = trees_signature([("0", 0), ("f", 1), ("g", 1), ("c", 2)])

_ZERO = App("0", ())


def _s(t: Term) -> Term:
    return App("s", (t,))


def _game1_move(x: Variable, y: Variable, s: Session) -> Formula:
    u = s.bound("u")
    stuck = And(
        Not(Eq(x, _ZERO)),
        And(Not(Exists((u,), Eq(x, _s(u)))), Eq(x, y)),
    )
    return Or(Eq(x, _s(y)), Or(Eq(x, _s(_s(y))), stuck))


def _is_g(v: Variable, s: Session) -> Formula:
    i = s.bound("i")
    return Exists((i,), Eq(v, App("g", (i,))))


def _succ(v: Variable, w: Variable, s: Session) -> Formula:
    j = s.bound("j")
    odd = Exists((j,), And(Eq(v, App("g", (j,))), Eq(w, App("f", (v,)))))
    even = And(Not(_is_g(v, s)), Eq(w, App("g", (v,))))
    return Or(odd, even)


def _pred(v: Variable, w: Variable, s: Session) -> Formula:
    j1, k1 = s.bound("j"), s.bound("k")
    via_f = Exists(
        (j1,),
        And(
            Eq(v, App("f", (j1,))),
            Or(
                Exists((k1,), And(Eq(j1, App("g", (k1,))), Eq(w, j1))),
                And(Not(Exists((k1,), Eq(j1, App("g", (k1,))))), Eq(w, v)),
            ),
        ),
    )
    j2, k2 = s.bound("j"), s.bound("k")
    via_g = Exists(
        (j2,),
        And(
            Eq(v, App("g", (j2,))),
            Or(
                Exists((k2,), And(Eq(j2, App("g", (k2,))), Eq(w, v))),
                And(Not(Exists((k2,), Eq(j2, App("g", (k2,))))), Eq(w, j2)),
            ),
        ),
    )
    j3, j4 = s.bound("j"), s.bound("j")
    junk = And(
        Not(Exists((j3,), Eq(v, App("f", (j3,))))),
        And(
            Not(Exists((j4,), Eq(v, App("g", (j4,))))),
            And(Not(Eq(v, _ZERO)), Eq(w, v)),
        ),
    )
    return Or(via_f, Or(via_g, junk))


def _game2_transition(x: Variable, y: Variable, s: Session) -> Formula:
    u, v, w = s.bound("u"), s.bound("v"), s.bound("w")
    shape = Or(
        And(Eq(x, App("c", (u, v))), Eq(y, App("c", (u, w)))),
        And(Eq(x, App("c", (v, u))), Eq(y, App("c", (w, u)))),
    )
    act = Or(
        And(_is_g(u, s), _succ(v, w, s)),
        And(Not(_is_g(u, s)), _pred(v, w, s)),
    )
    return Exists((u, v, w), And(shape, act))


def _game2_move(x: Variable, y: Variable, s: Session) -> Formula:
    u, v = s.bound("u"), s.bound("v")
    stuck = And(Not(Exists((u, v), Eq(x, App("c", (u, v))))), Eq(x, y))
    return Or(_game2_transition(x, y, s), stuck)


@dataclass(frozen=True)
class GameSpec:
    game: int
    signature: Signature

    def move(self, x: Variable, y: Variable, session: Session) -> Formula:
        if self.game == 1:
            return _game1_move(x, y, session)
        return _game2_move(x, y, session)

    def theory(self, debug: bool = False) -> TreesTheory:
        return TreesTheory(self.signature, debug=debug)


GAME1 = GameSpec(1, GAME1_SIGNATURE)
GAME2 = GameSpec(2, GAME2_SIGNATURE)


def game_spec(game: int) -> GameSpec:
    if game == 1:
        return GAME1
    if game == 2:
        return GAME2
    raise SolverError(f"unknown game {game}")


def gen_winning(spec: GameSpec, k: int, x: Variable, session: Session) -> Formula:
    """winning_k(x): 2k alternated quantifier blocks, innermost body false."""
    if k < 0:
        raise SolverError("k must be non-negative")
    if k == 0:
        return FALSE
    y = session.bound("y")
    x2 = session.bound("x")
    inner = gen_winning(spec, k - 1, x2, session)
    return Exists(
        (y,),
        And(
            spec.move(x, y, session),
            Not(Exists((x2,), And(spec.move(y, x2, session), Not(inner)))),
        ),
    )


def encode_position(spec: GameSpec, pos) -> Term:
    """Ground tree for a game position."""
    if spec.game == 1:
        i = pos
        if i < 0:
            raise SolverError("positions are non-negative")
        t: Term = _ZERO
        for _ in range(i):
            t = _s(t)
        return t
    i, j = pos
    if i < 0 or j < 0:
        raise SolverError("positions are non-negative")
    return App("c", (_encode_nat(i), _encode_nat(j)))


def _encode_nat(i: int) -> Term:
    if i == 0:
        return _ZERO
    if i % 2 == 1:
        return App("g", (_encode_nat(i - 1),))
    return App("f", (App("g", (_encode_nat(i - 2),)),))


# ---------------------------------------------------------------------------
# Benchmark/validation harness


@dataclass
class BenchRow:
    k: int
    status: str  # "ok" or "-"
    millis: Optional[float] = None
    disjuncts: Optional[int] = None
    steps: Optional[int] = None
    validated: Optional[bool] = None


@dataclass
class BenchReport:
    game: int
    position_bound: int
    rows: list[BenchRow] = field(default_factory=list)

    def to_csv(self) -> str:
        """k-column layout: one line per metric."""
        ks = ",".join(str(r.k) for r in self.rows)
        ms = ",".join(
            "-" if r.millis is None else f"{r.millis:.1f}" for r in self.rows
        )
        size = ",".join(
            "-" if r.disjuncts is None else str(r.disjuncts) for r in self.rows
        )
        ok = ",".join(
            "-" if r.validated is None else ("yes" if r.validated else "NO")
            for r in self.rows
        )
        return "\n".join(
            [f"k,{ks}", f"time_ms,{ms}", f"disjuncts,{size}", f"validated,{ok}"]
        )

    def render(self) -> str:
        lines = [
            "bench:",
            f"  game: {self.game}",
            f"  position_bound: {self.position_bound}",
            "  rows:",
        ]
        for r in self.rows:
            lines.append(
                f"    - k: {r.k}  status: {r.status}  time_ms: "
                f"{'-' if r.millis is None else f'{r.millis:.1f}'}  disjuncts: "
                f"{'-' if r.disjuncts is None else r.disjuncts}  steps: "
                f"{'-' if r.steps is None else r.steps}  validated: "
                f"{'-' if r.validated is None else ('yes' if r.validated else 'NO')}"
            )
        lines.append("  csv: |")
        for line in self.to_csv().splitlines():
            lines.append(f"    {line}")
        return "\n".join(lines)

    def all_validated(self) -> bool:
        return all(r.validated for r in self.rows if r.status == "ok")


def _game_positions(game: int, bound: int):
    if game == 1:
        return list(range(bound + 1))
    return [(i, j) for i in range(bound + 1) for j in range(bound + 1)]


def validate_answer(
    spec: GameSpec, k: int, x: Variable, answer: Answer, position_bound: int
) -> bool:
    brute = game_brute_force(spec.game, k, position_bound)
    for pos in _game_positions(spec.game, position_bound):
        claimed = eval_solved_on_ground(answer, {x: encode_position(spec, pos)})
        if claimed != (pos in brute):
            return False
    return True


def run_bench(
    game: int,
    k_max: int,
    budget_seconds: Optional[float] = None,
    position_bound: Optional[int] = None,
    limits: Optional[Limits] = None,
) -> BenchReport:
    """Solve winning_k for k = 0..k_max and validate against brute force."""
    spec = game_spec(game)
    theory = spec.theory()
    bound = position_bound if position_bound is not None else (50 if game == 1 else 8)
    report = BenchReport(game, bound)
    t_start = time.monotonic()
    for k in range(k_max + 1):
        if budget_seconds is not None and time.monotonic() - t_start > budget_seconds:
            report.rows.append(BenchRow(k, "-"))
            continue
        session = Session()
        x = session.var("x")
        formula = gen_winning(spec, k, x, session)
        row_limits = limits or Limits()
        if budget_seconds is not None:
            remaining = budget_seconds - (time.monotonic() - t_start)
            row_limits = Limits(
                row_limits.max_steps,
                row_limits.max_depth,
                row_limits.max_nodes,
                remaining,
            )
        t0 = time.monotonic()
        try:
            answer = present_solutions(formula, theory, session, row_limits)
        except ResourceLimitError:
            report.rows.append(BenchRow(k, "-"))
            continue
        millis = (time.monotonic() - t0) * 1000.0
        ok = validate_answer(spec, k, x, answer, bound)
        report.rows.append(
            BenchRow(k, "ok", millis, len(answer.disjuncts), answer.stats.steps, ok)
        )
    return report

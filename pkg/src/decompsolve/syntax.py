"""Concrete syntax: parsing and deterministic printing.

Grammar (fixed):

    formula    ::= ('ex' | 'all') name* '.' formula | iff
    iff        ::= imp ('<->' iff)?                  # right-associative
    imp        ::= disj ('->' imp)?                  # right-associative
    disj       ::= conj ('|' conj)*                  # left-associative
    conj       ::= neg ('&' neg)*                    # left-associative
    neg        ::= '~' neg | atom
    atom       ::= 'true' | 'false' | rel | term '=' term | '(' formula ')'
    term       ::= addend ('+' addend)*              # right-nested sums
    addend     ::= '-' addend | INT '*' addend | primary
    primary    ::= name '(' term (',' term)* ')' | name | INT | '(' term ')'

`ex .` denotes the empty quantifier vector.  Integer literals are only
meaningful under the `ra` signature: `0` and `1` are its constants and
`k*t` abbreviates the k-fold sum `t + ... + t` (negated termwise for
negative k), which the parser expands eagerly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .core import (
    And,
    App,
    Eq,
    Exists,
    FALSE,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Rel,
    Session,
    Signature,
    SolverError,
    TRUE,
    Term,
    TrueF,
    FalseF,
    Variable,
    eq_signature,
    ra_signature,
    trees_signature,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start exceeds end")


class ParseError(SolverError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{message} at {span.start}..{span.end}")
        self.message = message
        self.span = span


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<arrow2><->)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>\d+)
  | (?P<punct>[().,=~&|+\-*/])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"true", "false", "ex", "all"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(pos, pos + 1))
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        kind = m.lastgroup
        tok = m.group()
        if kind == "ident" and tok in _KEYWORDS:
            kind = tok
        elif kind in ("arrow", "arrow2", "punct"):
            kind = tok
        out.append(_Token(kind, tok, SourceSpan(m.start(), m.end())))
    out.append(_Token("eof", "", SourceSpan(len(text), len(text))))
    return out


class _Parser:
    def __init__(self, text: str, sig: Signature, session: Session):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.sig = sig
        self.session = session
        self.scopes: list[dict[str, Variable]] = []

    # -- token plumbing

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, kind: Optional[str] = None) -> _Token:
        tok = self.tokens[self.pos]
        if kind is not None and tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.span)
        if tok.kind == "eof" and kind is None:
            raise ParseError("unexpected end of input", tok.span)
        self.pos += 1
        return tok

    def at(self, *kinds: str) -> bool:
        return self.tokens[self.pos].kind in kinds

    # -- formulas

    def formula(self) -> Formula:
        if self.at("ex", "all"):
            quant = self.take().kind
            names = []
            spans = []
            while self.at("ident"):
                tok = self.take()
                names.append(tok.text)
                spans.append(tok.span)
            self.take(".")
            for name, span in zip(names, spans):
                if self.sig.fn_arity(name) is not None or self.sig.rel_arity(name) is not None:
                    raise ParseError(f"{name!r} is a declared symbol, not a variable", span)
            bound = tuple(self.session.bound(n) for n in names)
            self.scopes.append(dict(zip(names, bound)))
            body = self.formula()
            self.scopes.pop()
            return Exists(bound, body) if quant == "ex" else Forall(bound, body)
        return self.iff()

    def iff(self) -> Formula:
        lhs = self.imp()
        if self.at("<->"):
            self.take()
            return Iff(lhs, self.iff())
        return lhs

    def imp(self) -> Formula:
        lhs = self.disj()
        if self.at("->"):
            self.take()
            return Implies(lhs, self.imp())
        return lhs

    def disj(self) -> Formula:
        out = self.conj()
        while self.at("|"):
            self.take()
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.neg()
        while self.at("&"):
            self.take()
            out = And(out, self.neg())
        return out

    def neg(self) -> Formula:
        if self.at("~"):
            self.take()
            return Not(self.neg())
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.kind == "true":
            self.take()
            return TRUE
        if tok.kind == "false":
            self.take()
            return FALSE
        if tok.kind == "ident" and self.sig.rel_arity(tok.text) is not None:
            return self.relation()
        if tok.kind == "(":
            # Could open a parenthesized formula or a parenthesized term on
            # the left of '='; try the equation reading first.
            mark = self.pos
            try:
                lhs = self.term()
                self.take("=")
            except ParseError:
                self.pos = mark
                self.take("(")
                inner = self.formula()
                self.take(")")
                return inner
            return Eq(lhs, self.term())
        lhs = self.term()
        self.take("=")
        return Eq(lhs, self.term())

    def relation(self) -> Formula:
        tok = self.take("ident")
        arity = self.sig.rel_arity(tok.text)
        args: list[Term] = []
        if self.at("("):
            self.take()
            args.append(self.term())
            while self.at(","):
                self.take()
                args.append(self.term())
            self.take(")")
        if len(args) != arity:
            raise ParseError(
                f"relation {tok.text!r} expects {arity} arguments, got {len(args)}", tok.span
            )
        return Rel(tok.text, tuple(args))

    # -- terms

    def term(self) -> Term:
        parts = [self.addend()]
        while self.at("+"):
            self.take()
            parts.append(self.addend())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = App("+", (p, out))
        return out

    def addend(self) -> Term:
        if self.at("-"):
            tok = self.take()
            if self.sig.fn_arity("-") is None:
                raise ParseError("'-' is not in this signature", tok.span)
            return App("-", (self.addend(),))
        if self.at("int"):
            return self.int_term()
        return self.primary()

    def int_term(self) -> Term:
        tok = self.take("int")
        value = int(tok.text)
        if self.at("*"):
            self.take()
            if self.sig.theory != "ra":
                raise ParseError("monomials k*t require the ra signature", tok.span)
            body = self.addend()
            return _scale(value, body)
        if self.sig.fn_arity(tok.text) == 0:
            return App(tok.text, ())
        raise ParseError(f"constant {tok.text!r} is not in this signature", tok.span)

    def primary(self) -> Term:
        tok = self.peek()
        if tok.kind == "(":
            self.take()
            inner = self.term()
            self.take(")")
            return inner
        tok = self.take("ident")
        arity = self.sig.fn_arity(tok.text)
        if self.at("(") and arity is not None:
            self.take()
            args = [self.term()]
            while self.at(","):
                self.take()
                args.append(self.term())
            self.take(")")
            if len(args) != arity:
                raise ParseError(
                    f"function {tok.text!r} expects {arity} arguments, got {len(args)}", tok.span
                )
            return App(tok.text, tuple(args))
        if arity is not None:
            if arity != 0:
                raise ParseError(f"function {tok.text!r} expects {arity} arguments", tok.span)
            return App(tok.text, ())
        if self.sig.rel_arity(tok.text) is not None:
            raise ParseError(f"relation {tok.text!r} used as a term", tok.span)
        return self.lookup(tok.text)

    def lookup(self, name: str) -> Variable:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return self.session.var(name)


def _scale(k: int, t: Term) -> Term:
    """Expand the k-fold sum abbreviation k*t."""
    if k == 0:
        return App("0", ())
    unit = t if k > 0 else App("-", (t,))
    out = unit
    for _ in range(abs(k) - 1):
        out = App("+", (unit, out))
    return out


def parse_formula(text: str, sig: Signature, session: Optional[Session] = None) -> Formula:
    p = _Parser(text, sig, session if session is not None else Session())
    out = p.formula()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.span)
    return out


# ---------------------------------------------------------------------------
# Signature files


def parse_signature(text: str) -> Signature:
    theory: Optional[str] = None
    functions: list[tuple[str, int]] = []
    relations: list[tuple[str, int]] = []
    offset = 0
    for raw in text.splitlines(keepends=True):
        line = raw.split("#", 1)[0].strip()
        span = SourceSpan(offset, offset + len(raw.rstrip("\n")))
        offset += len(raw)
        if not line:
            continue
        fields = line.split()
        if fields[0] == "theory":
            if theory is not None:
                raise ParseError("duplicate theory line", span)
            if len(fields) != 2 or fields[1] not in ("eq", "ra", "trees"):
                raise ParseError("expected: theory eq|ra|trees", span)
            theory = fields[1]
        elif fields[0] in ("fun", "rel"):
            if theory is None:
                raise ParseError("theory line must come first", span)
            if len(fields) != 2 or "/" not in fields[1]:
                raise ParseError(f"expected: {fields[0]} name/arity", span)
            name, _, arity_text = fields[1].partition("/")
            if not name or not arity_text.isdigit():
                raise ParseError(f"expected: {fields[0]} name/arity", span)
            (functions if fields[0] == "fun" else relations).append((name, int(arity_text)))
        else:
            raise ParseError(f"unknown declaration {fields[0]!r}", span)
    if theory is None:
        raise ParseError("missing theory line", SourceSpan(0, max(0, len(text) - 1) if text else 0))
    try:
        if theory == "eq":
            if functions or relations:
                raise ParseError("eq admits no symbol declarations", SourceSpan(0, len(text)))
            return eq_signature()
        if theory == "ra":
            if functions or relations:
                raise ParseError("ra fixes its symbols; declare none", SourceSpan(0, len(text)))
            return ra_signature()
        if relations:
            raise ParseError("trees admits no relation symbols", SourceSpan(0, len(text)))
        return trees_signature(functions)
    except SolverError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), SourceSpan(0, len(text))) from exc


# ---------------------------------------------------------------------------
# Printing

_LEVEL_IFF, _LEVEL_IMP, _LEVEL_OR, _LEVEL_AND, _LEVEL_NEG = 1, 2, 3, 4, 5


def print_formula(f: Formula) -> str:
    return _pf(f, 0)


def _wrap(s: str, level: int, minimum: int) -> str:
    return f"({s})" if level < minimum else s


def _pf(f: Formula, minimum: int) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Eq):
        return f"{print_term(f.lhs)} = {print_term(f.rhs)}"
    if isinstance(f, Rel):
        if not f.args:
            return f.name
        return f"{f.name}({', '.join(print_term(t) for t in f.args)})"
    if isinstance(f, Not):
        body = _pf(f.body, 0)
        if isinstance(f.body, (TrueF, FalseF)):
            return f"~{body}"
        return f"~({body})"
    if isinstance(f, Iff):
        s = f"{_pf(f.lhs, _LEVEL_IMP)} <-> {_pf(f.rhs, _LEVEL_IFF)}"
        return _wrap(s, _LEVEL_IFF, minimum)
    if isinstance(f, Implies):
        s = f"{_pf(f.lhs, _LEVEL_OR)} -> {_pf(f.rhs, _LEVEL_IMP)}"
        return _wrap(s, _LEVEL_IMP, minimum)
    if isinstance(f, Or):
        s = f"{_pf(f.lhs, _LEVEL_OR)} | {_pf(f.rhs, _LEVEL_AND)}"
        return _wrap(s, _LEVEL_OR, minimum)
    if isinstance(f, And):
        s = f"{_pf(f.lhs, _LEVEL_AND)} & {_pf(f.rhs, _LEVEL_NEG)}"
        return _wrap(s, _LEVEL_AND, minimum)
    word = "ex" if isinstance(f, Exists) else "all"
    names = " ".join(v.name for v in f.vars)
    head = f"{word} {names}." if names else f"{word} ."
    s = f"{head} {_pf(f.body, 0)}"
    return f"({s})" if minimum > 0 else s


def print_term(t: Term) -> str:
    return _pt(t, 0)


def _pt(t: Term, minimum: int) -> str:
    # term levels: 0 = sum position, 1 = addend position
    if isinstance(t, Variable):
        return t.name
    if t.fname == "+" and len(t.args) == 2:
        s = f"{_pt(t.args[0], 1)} + {_pt(t.args[1], 0)}"
        return f"({s})" if minimum > 0 else s
    if t.fname == "-" and len(t.args) == 1:
        return f"-{_pt(t.args[0], 1)}"
    if not t.args:
        return t.fname
    return f"{t.fname}({', '.join(_pt(a, 0) for a in t.args)})"

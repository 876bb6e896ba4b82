"""scLTL (no Next) formulas: AST, canonical constructors, parser and progression.

Formulas are immutable and always built through the smart constructors
(:func:`conj`, :func:`disj`, :func:`until`, :func:`eventually`), which keep
them in a canonical form: n-ary And/Or flattened, sorted and deduplicated,
constants absorbed, and syntactically subsumed operands dropped.  Two
progressions that reach the same canonical formula therefore compare equal,
which is what makes DFA construction by progression terminate.

A letter is an ``int`` bitmask over the alphabet: bit ``i`` is set iff
observation ``i`` holds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

__all__ = [
    "Formula",
    "Top",
    "Bottom",
    "Obs",
    "NegObs",
    "And",
    "Or",
    "Until",
    "Eventually",
    "TRUE",
    "FALSE",
    "FormulaError",
    "MAX_OBSERVATIONS",
    "conj",
    "disj",
    "until",
    "eventually",
    "implies",
    "parse",
    "progress",
    "dnf",
    "to_string",
    "letter_of",
    "letter_names",
]

MAX_OBSERVATIONS = 16


class FormulaError(ValueError):
    """Raised for malformed formula text.

    ``position`` is the 0-based character offset of the offending token, or
    ``None`` when the error is not tied to a location.
    """

    def __init__(self, message: str, position: int | None = None, kind: str = "syntax"):
        self.position = position
        self.kind = kind
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


# Node kinds are ordered by rank for the canonical sort key.
_RANK_TOP, _RANK_BOTTOM, _RANK_OBS, _RANK_NEG, _RANK_UNTIL, _RANK_EV, _RANK_AND, _RANK_OR = range(8)


@dataclass(frozen=True, slots=True)
class Top:
    key: tuple = field(default=(_RANK_TOP,), init=False, repr=False, compare=False)

    def __repr__(self) -> str:
        return "True"


@dataclass(frozen=True, slots=True)
class Bottom:
    key: tuple = field(default=(_RANK_BOTTOM,), init=False, repr=False, compare=False)

    def __repr__(self) -> str:
        return "False"


@dataclass(frozen=True, slots=True)
class Obs:
    index: int
    name: str = field(default="", compare=False)
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (_RANK_OBS, self.index))


@dataclass(frozen=True, slots=True)
class NegObs:
    index: int
    name: str = field(default="", compare=False)
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (_RANK_NEG, self.index))


@dataclass(frozen=True, slots=True)
class Until:
    lhs: "Formula"
    rhs: "Formula"
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (_RANK_UNTIL, self.lhs.key, self.rhs.key))


@dataclass(frozen=True, slots=True)
class Eventually:
    sub: "Formula"
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (_RANK_EV, self.sub.key))


@dataclass(frozen=True, slots=True)
class And:
    args: tuple
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (_RANK_AND, len(self.args)) + tuple(a.key for a in self.args))


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (_RANK_OR, len(self.args)) + tuple(a.key for a in self.args))


Formula = Union[Top, Bottom, Obs, NegObs, Until, Eventually, And, Or]

TRUE = Top()
FALSE = Bottom()


# ---------------------------------------------------------------------------
# syntactic implication (sound, incomplete)


@lru_cache(maxsize=1 << 16)
def implies(a: Formula, b: Formula) -> bool:
    """Return True only if every finite word satisfying ``a`` satisfies ``b``.

    The check is purely syntactic and conservative; ``False`` means "not
    proven".  Used for absorption inside And/Or.
    """
    if a == b or isinstance(b, Top) or isinstance(a, Bottom):
        return True
    if isinstance(a, Top) or isinstance(b, Bottom):
        return False
    if isinstance(a, Or) and all(implies(x, b) for x in a.args):
        return True
    if isinstance(b, And) and all(implies(a, y) for y in b.args):
        return True
    if isinstance(a, And) and any(implies(x, b) for x in a.args):
        return True
    if isinstance(b, Or) and any(implies(a, y) for y in b.args):
        return True
    if isinstance(b, Eventually):
        if implies(a, b.sub):
            return True
        if isinstance(a, Eventually) and implies(a.sub, b):
            return True
        if isinstance(a, Until) and implies(a.rhs, b):
            return True
    if isinstance(b, Until):
        if implies(a, b.rhs):
            return True
        if isinstance(a, Until) and implies(a.lhs, b.lhs) and implies(a.rhs, b.rhs):
            return True
    return False


def _absorb(items: list, keep_weaker: bool) -> list:
    # keep_weaker=True (Or): drop d when d => e for another e.
    # keep_weaker=False (And): drop c when d => c for another d.
    # On mutual implication the operand with the smaller key survives.
    kept = []
    for i, f in enumerate(items):
        dominated = False
        for j, g in enumerate(items):
            if i == j:
                continue
            stronger, weaker = (f, g) if keep_weaker else (g, f)
            if implies(stronger, weaker):
                if implies(weaker, stronger) and f.key < g.key:
                    continue
                dominated = True
                break
        if not dominated:
            kept.append(f)
    return kept


def conj(*parts: Formula) -> Formula:
    flat: set = set()
    for p in parts:
        if isinstance(p, Bottom):
            return FALSE
        if isinstance(p, Top):
            continue
        if isinstance(p, And):
            flat.update(p.args)
        else:
            flat.add(p)
    obs = {f.index for f in flat if isinstance(f, Obs)}
    if any(isinstance(f, NegObs) and f.index in obs for f in flat):
        return FALSE
    items = _absorb(sorted(flat, key=lambda f: f.key), keep_weaker=False)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(tuple(items))


def disj(*parts: Formula) -> Formula:
    flat: set = set()
    for p in parts:
        if isinstance(p, Top):
            return TRUE
        if isinstance(p, Bottom):
            continue
        if isinstance(p, Or):
            flat.update(p.args)
        else:
            flat.add(p)
    items = _absorb(sorted(flat, key=lambda f: f.key), keep_weaker=True)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(tuple(items))


def until(lhs: Formula, rhs: Formula) -> Formula:
    if isinstance(rhs, (Top, Bottom)):
        return rhs
    if isinstance(lhs, Bottom) or implies(lhs, rhs):
        return rhs
    if isinstance(lhs, Top):
        return eventually(rhs)
    return Until(lhs, rhs)


def eventually(sub: Formula) -> Formula:
    if isinstance(sub, (Top, Bottom, Eventually)):
        return sub
    if isinstance(sub, Until):
        return eventually(sub.rhs)
    return Eventually(sub)


# ---------------------------------------------------------------------------
# progression


def progress(f: Formula, letter: int) -> Formula:
    """Rewrite ``f`` after reading one letter.

    For any finite word ``w``, ``letter . w`` is a good prefix of ``f`` iff
    ``w`` is a good prefix of ``progress(f, letter)``.
    """
    return _progress(f, letter)


@lru_cache(maxsize=1 << 18)
def _progress(f: Formula, letter: int) -> Formula:
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Obs):
        return TRUE if letter >> f.index & 1 else FALSE
    if isinstance(f, NegObs):
        return FALSE if letter >> f.index & 1 else TRUE
    if isinstance(f, And):
        return conj(*(_progress(a, letter) for a in f.args))
    if isinstance(f, Or):
        return disj(*(_progress(a, letter) for a in f.args))
    if isinstance(f, Until):
        return disj(_progress(f.rhs, letter), conj(_progress(f.lhs, letter), f))
    if isinstance(f, Eventually):
        return disj(_progress(f.sub, letter), f)
    raise TypeError(f"not a formula: {f!r}")


@lru_cache(maxsize=1 << 16)
def dnf(f: Formula) -> Formula:
    """Disjunctive normal form over atoms (observations, Until, Eventually).

    Temporal subformulas are treated as opaque atoms.  Since progression only
    ever recombines the temporal subformulas of the original formula, the DNF
    states reachable by progression form a finite set.
    """
    if isinstance(f, Or):
        return disj(*(dnf(a) for a in f.args))
    if isinstance(f, And):
        clauses: list[Formula] = [TRUE]
        for a in f.args:
            d = dnf(a)
            options = d.args if isinstance(d, Or) else (d,)
            clauses = [conj(c, o) for c in clauses for o in options]
        return disj(*clauses)
    return f


# ---------------------------------------------------------------------------
# printing


def to_string(f: Formula) -> str:
    """Render ``f`` in the surface syntax accepted by :func:`parse`."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Obs):
        return f.name or f"o{f.index}"
    if isinstance(f, NegObs):
        return "!" + (f.name or f"o{f.index}")
    if isinstance(f, Eventually):
        return f"F {_wrap(f.sub)}"
    if isinstance(f, Until):
        return f"{_wrap(f.lhs)} U {_wrap(f.rhs)}"
    if isinstance(f, And):
        return " & ".join(_wrap(a) for a in f.args)
    if isinstance(f, Or):
        return " | ".join(_wrap(a) for a in f.args)
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula) -> str:
    s = to_string(f)
    if isinstance(f, (Top, Bottom, Obs, NegObs)):
        return s
    return f"({s})"


def letter_of(names: Sequence[str], alphabet: Sequence[str]) -> int:
    """Bitmask for a set of observation names."""
    index = {n: i for i, n in enumerate(alphabet)}
    letter = 0
    for n in names:
        if n not in index:
            raise FormulaError(f"unknown observation {n!r}", kind="unknown-observation")
        letter |= 1 << index[n]
    return letter


def letter_names(letter: int, alphabet: Sequence[str]) -> list[str]:
    return [n for i, n in enumerate(alphabet) if letter >> i & 1]


# ---------------------------------------------------------------------------
# parser
#
# precedence: unary (F, !) > U > & > | ; U is right-associative.

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><->|->|<>|\[\]|&&|\|\||[!~&|()¬∧∨◊□⊤→↔]))"
)

_NOT = {"!", "~", "¬"}
_AND = {"&", "&&", "∧"}
_OR = {"|", "||", "∨"}
_EVENTUALLY = {"F", "<>", "◊"}
_UNTIL = {"U"}
_TRUE = {"true", "True", "⊤"}
_NEXT = {"X"}
_UNSUPPORTED = {"G", "[]", "□", "R", "W", "false", "False", "->", "<->", "→", "↔"}


class _Parser:
    def __init__(self, text: str, alphabet: Sequence[str]):
        self.text = text
        self.index = {n: i for i, n in enumerate(alphabet)}
        self.tokens = self._lex(text)
        self.pos = 0

    @staticmethod
    def _lex(text: str) -> list[tuple[str, int]]:
        tokens = []
        i = 0
        while i < len(text):
            if text[i].isspace():
                i += 1
                continue
            m = _TOKEN_RE.match(text, i)
            if m is None or m.end() == i:
                raise FormulaError(f"unexpected character {text[i]!r}", i)
            tok = m.group("ident") or m.group("op")
            tokens.append((tok, m.start("ident") if m.group("ident") else m.start("op")))
            i = m.end()
        return tokens

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def where(self) -> int:
        return self.tokens[self.pos][1] if self.pos < len(self.tokens) else len(self.text)

    def take(self) -> tuple[str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        if not self.tokens:
            raise FormulaError("empty formula", 0)
        f = self.disjunction()
        if self.pos != len(self.tokens):
            tok, at = self.tokens[self.pos]
            if tok in _UNSUPPORTED:
                raise FormulaError(f"operator {tok!r} is not part of co-safe LTL", at, kind="unsupported")
            raise FormulaError(f"unexpected token {self.peek()!r}", self.where())
        return f

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek() in _OR:
            self.take()
            parts.append(self.conjunction())
        return disj(*parts)

    def conjunction(self) -> Formula:
        parts = [self.until()]
        while self.peek() in _AND:
            self.take()
            parts.append(self.until())
        return conj(*parts)

    def until(self) -> Formula:
        lhs = self.unary()
        if self.peek() in _UNTIL:
            self.take()
            return until(lhs, self.until())
        return lhs

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise FormulaError("unexpected end of formula", self.where())
        if tok in _NOT:
            _, at = self.take()
            operand = self.unary()
            if isinstance(operand, Obs):
                return NegObs(operand.index, operand.name)
            raise FormulaError(
                "negation may only be applied to an observation", at, kind="negation"
            )
        if tok in _EVENTUALLY:
            self.take()
            return eventually(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        tok, at = self.take()
        if tok == "(":
            f = self.disjunction()
            if self.peek() != ")":
                raise FormulaError("expected ')'", self.where())
            self.take()
            return f
        if tok in _TRUE:
            return TRUE
        if tok in _NEXT:
            raise FormulaError("the Next operator is not supported", at, kind="next")
        if tok in _UNSUPPORTED:
            raise FormulaError(f"operator {tok!r} is not part of co-safe LTL", at, kind="unsupported")
        if tok in self.index:
            return Obs(self.index[tok], tok)
        if tok in _UNTIL or tok in {")"} | _AND | _OR:
            raise FormulaError(f"unexpected token {tok!r}", at)
        raise FormulaError(f"unknown observation {tok!r}", at, kind="unknown-observation")


def parse(text: str, alphabet: Sequence[str]) -> Formula:
    """Parse ``text`` into a canonical formula over ``alphabet``.

    >>> parse("F A", ["A"])
    Eventually(sub=Obs(index=0, name='A'))
    """
    alphabet = list(alphabet)
    if len(alphabet) > MAX_OBSERVATIONS:
        raise FormulaError(f"at most {MAX_OBSERVATIONS} observations are supported", kind="alphabet")
    if len(set(alphabet)) != len(alphabet):
        raise FormulaError("duplicate observation names in alphabet", kind="alphabet")
    reserved = _EVENTUALLY | _UNTIL | _TRUE | _NEXT | _UNSUPPORTED
    for name in alphabet:
        if name in reserved or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise FormulaError(f"invalid observation name {name!r}", kind="alphabet")
    return _Parser(text, alphabet).parse()

"""LTL abstract syntax, parsing, normalization and index substitution.

Formulas are immutable trees of frozen dataclasses.  Atoms carry a
:class:`SignalRef` which may be indexed by a process variable (``g(i)``),
by the ring predecessor (``g(i-1)``), by a concrete index (``g(0)``), or
not at all (global signals such as ``HREADY``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

__all__ = [
    "IndexTerm", "IndexVar", "IndexPrev", "IndexLit", "SignalRef",
    "Formula", "Atom", "TrueF", "FalseF", "Not", "And", "Or", "Implies",
    "Iff", "Next", "Eventually", "Globally", "Until", "WeakUntil",
    "CountedWeakUntil", "ParseError", "parse_ltl", "pretty",
    "expand_counted_until", "to_nnf", "substitute_index", "map_atoms",
    "atoms_of", "signal_names", "conj", "disj", "simplify",
    "has_next", "has_temporal", "index_vars", "evaluate_lasso",
    "RESERVED_LOCAL",
]

# Reserved signal names with fixed roles in every specification.
RESERVED_LOCAL = {"TOK", "SEND", "RCV", "SCH"}


# ---------------------------------------------------------------------------
# Index terms and signal references


class IndexTerm:
    """Base class for the index part of an indexed atom."""


@dataclass(frozen=True)
class IndexVar(IndexTerm):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class IndexPrev(IndexTerm):
    """Ring predecessor of an index variable (``i-1``, modulo ring size)."""

    name: str

    def __str__(self) -> str:
        return f"{self.name}-1"


@dataclass(frozen=True)
class IndexLit(IndexTerm):
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class SignalRef:
    """Reference to a signal, optionally indexed by a process index term."""

    name: str
    index: IndexTerm | None = None

    def __str__(self) -> str:
        if self.index is None:
            return self.name
        return f"{self.name}({self.index})"

    @property
    def is_global(self) -> bool:
        return self.index is None

    def ground_name(self) -> str:
        """Flat atom name for ground references (no index variables)."""
        if self.index is None:
            return self.name
        if isinstance(self.index, IndexLit):
            return f"{self.name}_{self.index.value}"
        raise ValueError(f"reference {self} is not ground")


# ---------------------------------------------------------------------------
# Formula AST


class Formula:
    """Base class for LTL formulas."""

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    ref: SignalRef

    def __repr__(self) -> str:
        return f"Atom({self.ref})"


@dataclass(frozen=True, repr=False)
class TrueF(Formula):
    def __repr__(self) -> str:
        return "true"


@dataclass(frozen=True, repr=False)
class FalseF(Formula):
    def __repr__(self) -> str:
        return "false"


@dataclass(frozen=True, repr=False)
class Not(Formula):
    sub: Formula

    def __repr__(self) -> str:
        return f"Not({self.sub!r})"


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"Implies({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Iff(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"Iff({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Next(Formula):
    sub: Formula

    def __repr__(self) -> str:
        return f"X({self.sub!r})"


@dataclass(frozen=True, repr=False)
class Eventually(Formula):
    sub: Formula

    def __repr__(self) -> str:
        return f"F({self.sub!r})"


@dataclass(frozen=True, repr=False)
class Globally(Formula):
    sub: Formula

    def __repr__(self) -> str:
        return f"G({self.sub!r})"


@dataclass(frozen=True, repr=False)
class Until(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"U({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class WeakUntil(Formula):
    """Weak until; defined by phi W psi == (phi U psi) | G phi."""

    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"W({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class CountedWeakUntil(Formula):
    """The W[k] macro; count must be at least 1."""

    count: int
    left: Formula
    right: Formula

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("W[k] requires k >= 1")

    def __repr__(self) -> str:
        return f"W[{self.count}]({self.left!r}, {self.right!r})"


def _cached_hash(self) -> int:
    h = self.__dict__.get("_hash")
    if h is None:
        vals = tuple(getattr(self, name) for name in self.__dataclass_fields__)
        h = hash((type(self).__name__,) + vals)
        object.__setattr__(self, "_hash", h)
    return h


# Normalization shares subtrees, so formulas are DAGs in practice; the
# generated recursive dataclass hash would be recomputed per call and make
# set operations quadratic on large instances.
for _cls in (Atom, TrueF, FalseF, Not, And, Or, Implies, Iff, Next,
             Eventually, Globally, Until, WeakUntil, CountedWeakUntil):
    _cls.__hash__ = _cached_hash  # type: ignore[method-assign]


TRUE = TrueF()
FALSE = FalseF()


def conj(parts: Sequence[Formula]) -> Formula:
    """Right-folded conjunction; empty conjunction is true."""
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(parts: Sequence[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


# ---------------------------------------------------------------------------
# Parser

_OPERATOR_KEYWORDS = {"X", "F", "G", "U", "W"}

# HBURST is an enumerated global input modeled as two bits; the unused
# letter 11 counts as SINGLE so the predicates stay total.
_BURST_BITS = ("HBURST0", "HBURST1")


def _burst_predicate(value: str) -> Formula:
    b0 = Atom(SignalRef(_BURST_BITS[0]))
    b1 = Atom(SignalRef(_BURST_BITS[1]))
    if value == "BURST4":
        return And(b0, Not(b1))
    if value == "INCR":
        return And(b1, Not(b0))
    if value == "SINGLE":
        return And(Not(And(b0, Not(b1))), Not(And(b1, Not(b0))))
    raise ValueError(f"unknown HBURST value {value}")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            line += 1
            col = 1
            pos += 1
            continue
        if ch.isspace():
            pos += 1
            col += 1
            continue
        start_col = col

        def emit(kind, text_, length):
            tokens.append(_Token(kind, text_, line, start_col))
            return length

        if text.startswith("&&", pos):
            pos += emit("AND", "&&", 2); col += 2
        elif text.startswith("||", pos):
            pos += emit("OR", "||", 2); col += 2
        elif text.startswith("->", pos):
            pos += emit("IMPLIES", "->", 2); col += 2
        elif text.startswith("<->", pos):
            pos += emit("IFF", "<->", 3); col += 3
        elif text.startswith("==", pos):
            pos += emit("EQ", "==", 2); col += 2
        elif ch == "!":
            pos += emit("NOT", "!", 1); col += 1
        elif ch == "(":
            pos += emit("LPAREN", "(", 1); col += 1
        elif ch == ")":
            pos += emit("RPAREN", ")", 1); col += 1
        elif ch == "[":
            pos += emit("LBRACK", "[", 1); col += 1
        elif ch == "]":
            pos += emit("RBRACK", "]", 1); col += 1
        elif ch == "-":
            pos += emit("MINUS", "-", 1); col += 1
        elif ch.isdigit():
            j = pos
            while j < n and text[j].isdigit():
                j += 1
            emit("INT", text[pos:j], j - pos)
            col += j - pos
            pos = j
        elif ch.isalpha() or ch == "_":
            j = pos
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[pos:j]
            if word in _OPERATOR_KEYWORDS:
                emit(word, word, j - pos)
            elif word == "true":
                emit("TRUE", word, j - pos)
            elif word == "false":
                emit("FALSE", word, j - pos)
            else:
                emit("IDENT", word, j - pos)
            col += j - pos
            pos = j
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], known_signals: set[str] | None):
        self.tokens = tokens
        self.pos = 0
        self.known = known_signals

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, kind: str | None = None) -> _Token:
        tok = self.tokens[self.pos]
        if kind is not None and tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.text or 'end of input'}",
                             tok.line, tok.column)
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        f = self.implication()
        tok = self.peek()
        if tok.kind != "EOF":
            raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.column)
        return f

    # implies/iff: lowest precedence, right associative
    def implication(self) -> Formula:
        left = self.disjunction()
        tok = self.peek()
        if tok.kind == "IMPLIES":
            self.take()
            return Implies(left, self.implication())
        if tok.kind == "IFF":
            self.take()
            return Iff(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek().kind == "OR":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.until()
        while self.peek().kind == "AND":
            self.take()
            f = And(f, self.until())
        return f

    # U / W / W[k]: right associative, tighter than &&
    def until(self) -> Formula:
        left = self.unary()
        tok = self.peek()
        if tok.kind == "U":
            self.take()
            return Until(left, self.until())
        if tok.kind == "W":
            self.take()
            if self.peek().kind == "LBRACK":
                self.take("LBRACK")
                count_tok = self.take("INT")
                self.take("RBRACK")
                count = int(count_tok.text)
                if count < 1:
                    raise ParseError("W[k] requires k >= 1",
                                     count_tok.line, count_tok.column)
                return CountedWeakUntil(count, left, self.until())
            return WeakUntil(left, self.until())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "NOT":
            self.take()
            return Not(self.unary())
        if tok.kind == "X":
            self.take()
            return Next(self.unary())
        if tok.kind == "F":
            self.take()
            return Eventually(self.unary())
        if tok.kind == "G":
            self.take()
            return Globally(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "LPAREN":
            self.take()
            f = self.implication()
            self.take("RPAREN")
            return f
        if tok.kind == "TRUE":
            self.take()
            return TRUE
        if tok.kind == "FALSE":
            self.take()
            return FALSE
        if tok.kind == "IDENT":
            return self.atom()
        raise ParseError(f"expected formula, found {tok.text or 'end of input'}",
                         tok.line, tok.column)

    def atom(self) -> Formula:
        name_tok = self.take("IDENT")
        name = name_tok.text
        if self.peek().kind == "EQ":
            # enumerated-signal sugar, e.g. HBURST==BURST4
            self.take()
            value_tok = self.take("IDENT")
            if name != "HBURST":
                raise ParseError(f"'==' is only supported for HBURST, not {name}",
                                 name_tok.line, name_tok.column)
            try:
                return _burst_predicate(value_tok.text)
            except ValueError as exc:
                raise ParseError(str(exc), value_tok.line, value_tok.column) from None
        index: IndexTerm | None = None
        if self.peek().kind == "LPAREN":
            self.take()
            index = self.index_term()
            self.take("RPAREN")
        if self.known is not None and name not in self.known:
            raise ParseError(f"unknown signal {name!r}", name_tok.line, name_tok.column)
        return Atom(SignalRef(name, index))

    def index_term(self) -> IndexTerm:
        tok = self.peek()
        if tok.kind == "INT":
            self.take()
            return IndexLit(int(tok.text))
        if tok.kind == "IDENT" and tok.text in ("i", "j"):
            self.take()
            if self.peek().kind == "MINUS":
                self.take()
                one = self.take("INT")
                if one.text != "1":
                    raise ParseError("only offset -1 is supported", one.line, one.column)
                return IndexPrev(tok.text)
            return IndexVar(tok.text)
        raise ParseError(f"expected index term, found {tok.text!r}", tok.line, tok.column)


def parse_ltl(text: str, known_signals: set[str] | None = None) -> Formula:
    """Parse an expression in the surface grammar into a formula.

    If ``known_signals`` is given, atoms referring to undeclared names are
    rejected.
    """
    return _Parser(_tokenize(text), known_signals).parse()


# ---------------------------------------------------------------------------
# Pretty printer (inverse of the parser on ASTs)

_LVL_IMPL, _LVL_OR, _LVL_AND, _LVL_UNTIL, _LVL_UNARY = 0, 1, 2, 3, 4


def _pp(f: Formula, level: int) -> str:
    match f:
        case Atom(ref):
            return str(ref)
        case TrueF():
            return "true"
        case FalseF():
            return "false"
        case Not(sub):
            s = f"!{_pp(sub, _LVL_UNARY)}"
        case Next(sub):
            s = f"X {_pp(sub, _LVL_UNARY)}"
        case Eventually(sub):
            s = f"F {_pp(sub, _LVL_UNARY)}"
        case Globally(sub):
            s = f"G {_pp(sub, _LVL_UNARY)}"
        case Until(l, r):
            s = f"{_pp(l, _LVL_UNARY)} U {_pp(r, _LVL_UNTIL)}"
        case WeakUntil(l, r):
            s = f"{_pp(l, _LVL_UNARY)} W {_pp(r, _LVL_UNTIL)}"
        case CountedWeakUntil(k, l, r):
            s = f"{_pp(l, _LVL_UNARY)} W[{k}] {_pp(r, _LVL_UNTIL)}"
        case And(l, r):
            s = f"{_pp(l, _LVL_AND)} && {_pp(r, _LVL_AND + 1)}"
        case Or(l, r):
            s = f"{_pp(l, _LVL_OR)} || {_pp(r, _LVL_OR + 1)}"
        case Implies(l, r):
            s = f"{_pp(l, _LVL_IMPL + 1)} -> {_pp(r, _LVL_IMPL)}"
        case Iff(l, r):
            s = f"{_pp(l, _LVL_IMPL + 1)} <-> {_pp(r, _LVL_IMPL)}"
        case _:
            raise TypeError(f"not a formula: {f!r}")
    own = {
        Not: _LVL_UNARY, Next: _LVL_UNARY, Eventually: _LVL_UNARY,
        Globally: _LVL_UNARY, Until: _LVL_UNTIL, WeakUntil: _LVL_UNTIL,
        CountedWeakUntil: _LVL_UNTIL, And: _LVL_AND, Or: _LVL_OR,
        Implies: _LVL_IMPL, Iff: _LVL_IMPL,
    }[type(f)]
    return f"({s})" if own < level else s


def pretty(f: Formula) -> str:
    return _pp(f, 0)


# ---------------------------------------------------------------------------
# Structural helpers


def walk(f: Formula) -> Iterator[Formula]:
    """All distinct subformulas of ``f`` (each shared node visited once)."""
    seen: set[int] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        yield g
        match g:
            case Not(s) | Next(s) | Eventually(s) | Globally(s):
                stack.append(s)
            case (And(l, r) | Or(l, r) | Implies(l, r) | Iff(l, r)
                  | Until(l, r) | WeakUntil(l, r)):
                stack.append(l)
                stack.append(r)
            case CountedWeakUntil(_, l, r):
                stack.append(l)
                stack.append(r)


def atoms_of(f: Formula) -> list[SignalRef]:
    seen: dict[SignalRef, None] = {}
    for g in walk(f):
        if isinstance(g, Atom):
            seen.setdefault(g.ref)
    return list(seen)


def signal_names(f: Formula) -> set[str]:
    return {ref.name for ref in atoms_of(f)}


def index_vars(f: Formula) -> set[str]:
    out = set()
    for ref in atoms_of(f):
        if isinstance(ref.index, (IndexVar, IndexPrev)):
            out.add(ref.index.name)
    return out


def has_next(f: Formula) -> bool:
    return any(isinstance(g, Next) for g in walk(f))


def has_temporal(f: Formula) -> bool:
    return any(isinstance(g, (Next, Eventually, Globally, Until, WeakUntil,
                              CountedWeakUntil)) for g in walk(f))


def map_atoms(f: Formula, fn: Callable[[SignalRef], Formula]) -> Formula:
    """Rebuild ``f`` with every atom replaced by ``fn(ref)``."""
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        res = memo.get(g)
        if res is not None:
            return res
        match g:
            case Atom(ref):
                res = fn(ref)
            case TrueF() | FalseF():
                res = g
            case Not(s):
                res = Not(go(s))
            case Next(s):
                res = Next(go(s))
            case Eventually(s):
                res = Eventually(go(s))
            case Globally(s):
                res = Globally(go(s))
            case And(l, r):
                res = And(go(l), go(r))
            case Or(l, r):
                res = Or(go(l), go(r))
            case Implies(l, r):
                res = Implies(go(l), go(r))
            case Iff(l, r):
                res = Iff(go(l), go(r))
            case Until(l, r):
                res = Until(go(l), go(r))
            case WeakUntil(l, r):
                res = WeakUntil(go(l), go(r))
            case CountedWeakUntil(k, l, r):
                res = CountedWeakUntil(k, go(l), go(r))
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[g] = res
        return res

    return go(f)


def simplify(f: Formula) -> Formula:
    """Constant folding; keeps the formula language-equivalent."""
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        res = memo.get(g)
        if res is None:
            memo[g] = res = node(g)
        return res

    def node(g: Formula) -> Formula:
        match g:
            case Not(s):
                s = go(s)
                if isinstance(s, TrueF):
                    return FALSE
                if isinstance(s, FalseF):
                    return TRUE
                if isinstance(s, Not):
                    return s.sub
                return Not(s)
            case And(l, r):
                l, r = go(l), go(r)
                if isinstance(l, FalseF) or isinstance(r, FalseF):
                    return FALSE
                if isinstance(l, TrueF):
                    return r
                if isinstance(r, TrueF):
                    return l
                return And(l, r)
            case Or(l, r):
                l, r = go(l), go(r)
                if isinstance(l, TrueF) or isinstance(r, TrueF):
                    return TRUE
                if isinstance(l, FalseF):
                    return r
                if isinstance(r, FalseF):
                    return l
                return Or(l, r)
            case Implies(l, r):
                l, r = go(l), go(r)
                if isinstance(l, FalseF) or isinstance(r, TrueF):
                    return TRUE
                if isinstance(l, TrueF):
                    return r
                if isinstance(r, FalseF):
                    return go(Not(l))
                return Implies(l, r)
            case Iff(l, r):
                l, r = go(l), go(r)
                if isinstance(l, TrueF):
                    return r
                if isinstance(r, TrueF):
                    return l
                if isinstance(l, FalseF):
                    return go(Not(r))
                if isinstance(r, FalseF):
                    return go(Not(l))
                return Iff(l, r)
            case Next(s):
                s = go(s)
                return s if isinstance(s, (TrueF, FalseF)) else Next(s)
            case Eventually(s):
                s = go(s)
                return s if isinstance(s, (TrueF, FalseF)) else Eventually(s)
            case Globally(s):
                s = go(s)
                return s if isinstance(s, (TrueF, FalseF)) else Globally(s)
            case Until(l, r):
                l, r = go(l), go(r)
                if isinstance(r, (TrueF, FalseF)):
                    return r
                if isinstance(l, FalseF):
                    return r
                return Until(l, r)
            case WeakUntil(l, r):
                l, r = go(l), go(r)
                if isinstance(r, TrueF):
                    return TRUE
                if isinstance(l, TrueF):
                    return TRUE
                if isinstance(r, FalseF):
                    return go(Globally(l))
                if isinstance(l, FalseF):
                    return r
                return WeakUntil(l, r)
            case CountedWeakUntil(k, l, r):
                l, r = go(l), go(r)
                if isinstance(l, TrueF) or isinstance(r, TrueF):
                    return TRUE
                if isinstance(r, FalseF):
                    return go(Globally(l))
                return CountedWeakUntil(k, l, r)
            case _:
                return g

    return go(f)


# ---------------------------------------------------------------------------
# Normal forms


def expand_counted_until(f: Formula) -> Formula:
    """Rewrite every W[k] into nested weak untils.

    W[1] unfolds to a plain W; for k > 1,
    ``phi W[k] psi  ->  phi W (psi && X(phi W[k-1] psi))``.
    """
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        res = memo.get(g)
        if res is not None:
            return res
        match g:
            case CountedWeakUntil(k, l, r):
                l, r = go(l), go(r)
                res = WeakUntil(l, r)
                for _ in range(k - 1):
                    res = WeakUntil(l, And(r, Next(res)))
            case Atom() | TrueF() | FalseF():
                res = g
            case Not(s):
                res = Not(go(s))
            case Next(s):
                res = Next(go(s))
            case Eventually(s):
                res = Eventually(go(s))
            case Globally(s):
                res = Globally(go(s))
            case And(l, r):
                res = And(go(l), go(r))
            case Or(l, r):
                res = Or(go(l), go(r))
            case Implies(l, r):
                res = Implies(go(l), go(r))
            case Iff(l, r):
                res = Iff(go(l), go(r))
            case Until(l, r):
                res = Until(go(l), go(r))
            case WeakUntil(l, r):
                res = WeakUntil(go(l), go(r))
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[g] = res
        return res

    return go(f)


def to_nnf(f: Formula) -> Formula:
    """Push negations down to the atoms.

    Uses the U/W dual pair: ``!(p U q) == !q W (!p && !q)`` and
    ``!(p W q) == !q U (!p && !q)``.  The input must not contain W[k].
    """
    memo: dict[tuple[bool, Formula], Formula] = {}

    def pos(g: Formula) -> Formula:
        key = (False, g)
        res = memo.get(key)
        if res is not None:
            return res
        match g:
            case Atom() | TrueF() | FalseF():
                res = g
            case And(l, r):
                res = And(pos(l), pos(r))
            case Or(l, r):
                res = Or(pos(l), pos(r))
            case Implies(l, r):
                res = Or(neg(l), pos(r))
            case Iff(l, r):
                res = Or(And(pos(l), pos(r)), And(neg(l), neg(r)))
            case Next(s):
                res = Next(pos(s))
            case Eventually(s):
                res = Eventually(pos(s))
            case Globally(s):
                res = Globally(pos(s))
            case Until(l, r):
                res = Until(pos(l), pos(r))
            case WeakUntil(l, r):
                res = WeakUntil(pos(l), pos(r))
            case Not(s):
                res = neg(s)
            case CountedWeakUntil():
                raise ValueError("expand W[k] before NNF conversion")
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[key] = res
        return res

    def neg(g: Formula) -> Formula:
        key = (True, g)
        res = memo.get(key)
        if res is not None:
            return res
        match g:
            case Atom():
                res = Not(g)
            case TrueF():
                res = FALSE
            case FalseF():
                res = TRUE
            case Not(s):
                res = pos(s)
            case And(l, r):
                res = Or(neg(l), neg(r))
            case Or(l, r):
                res = And(neg(l), neg(r))
            case Implies(l, r):
                res = And(pos(l), neg(r))
            case Iff(l, r):
                res = Or(And(pos(l), neg(r)), And(neg(l), pos(r)))
            case Next(s):
                res = Next(neg(s))
            case Eventually(s):
                res = Globally(neg(s))
            case Globally(s):
                res = Eventually(neg(s))
            case Until(l, r):
                nl, nr = neg(l), neg(r)
                res = WeakUntil(nr, And(nl, nr))
            case WeakUntil(l, r):
                nl, nr = neg(l), neg(r)
                res = Until(nr, And(nl, nr))
            case CountedWeakUntil():
                raise ValueError("expand W[k] before NNF conversion")
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[key] = res
        return res

    return pos(f)


def substitute_index(f: Formula, assignment: Mapping[str, int], ring_size: int) -> Formula:
    """Replace index variables by concrete process indices.

    ``i-1`` resolves modulo the ring size.  Unbound variables are an error.
    """

    def subst(ref: SignalRef) -> Formula:
        match ref.index:
            case None | IndexLit():
                return Atom(ref)
            case IndexVar(name):
                if name not in assignment:
                    raise ValueError(f"unbound index variable {name!r} in {ref}")
                return Atom(SignalRef(ref.name, IndexLit(assignment[name] % ring_size)))
            case IndexPrev(name):
                if name not in assignment:
                    raise ValueError(f"unbound index variable {name!r} in {ref}")
                return Atom(SignalRef(ref.name, IndexLit((assignment[name] - 1) % ring_size)))
        raise TypeError(f"bad index term in {ref}")

    return map_atoms(f, subst)


# ---------------------------------------------------------------------------
# Lasso evaluation (the semantic ground truth used by oracle tests)

Letter = frozenset


def evaluate_lasso(f: Formula, prefix: Sequence[frozenset[str]],
                   loop: Sequence[frozenset[str]]) -> bool:
    """Evaluate a ground formula on the ultimately periodic word prefix.loop^w.

    Letters are frozensets of the atom names that hold.  Least fixpoints
    (U, F) start from all-false, greatest fixpoints (W, G) from all-true,
    iterated over the lasso positions until stable.
    """
    if not loop:
        raise ValueError("loop must be nonempty")
    letters = list(prefix) + list(loop)
    n = len(letters)
    loop_start = len(prefix)

    def succ(p: int) -> int:
        return p + 1 if p + 1 < n else loop_start

    memo: dict[Formula, list[bool]] = {}

    def values(g: Formula) -> list[bool]:
        cached = memo.get(g)
        if cached is not None:
            return cached
        memo[g] = result = _values(g)
        return result

    def _values(g: Formula) -> list[bool]:
        match g:
            case TrueF():
                return [True] * n
            case FalseF():
                return [False] * n
            case Atom(ref):
                name = ref.ground_name()
                return [name in letters[p] for p in range(n)]
            case Not(s):
                v = values(s)
                return [not x for x in v]
            case And(l, r):
                a, b = values(l), values(r)
                return [x and y for x, y in zip(a, b)]
            case Or(l, r):
                a, b = values(l), values(r)
                return [x or y for x, y in zip(a, b)]
            case Implies(l, r):
                a, b = values(l), values(r)
                return [(not x) or y for x, y in zip(a, b)]
            case Iff(l, r):
                a, b = values(l), values(r)
                return [x == y for x, y in zip(a, b)]
            case Next(s):
                v = values(s)
                return [v[succ(p)] for p in range(n)]
            case Eventually(s):
                return _lfp(values(s), None, n, succ, kind="F")
            case Globally(s):
                return _gfp(values(s), None, n, succ, kind="G")
            case Until(l, r):
                return _lfp(values(r), values(l), n, succ, kind="U")
            case WeakUntil(l, r):
                return _gfp(values(r), values(l), n, succ, kind="W")
            case CountedWeakUntil(k, l, r):
                lv, rv = values(l), values(r)
                # semantic unfolding: W[1] = W, W[k] = l W (r && X W[k-1])
                acc = _gfp(rv, lv, n, succ, kind="W")
                for _ in range(k - 1):
                    tgt = [rv[p] and acc[succ(p)] for p in range(n)]
                    acc = _gfp(tgt, lv, n, succ, kind="W")
                return acc
        raise TypeError(f"not a formula: {g!r}")

    return values(f)[0]


def _lfp(right: list[bool], left: list[bool] | None, n: int,
         succ: Callable[[int], int], kind: str) -> list[bool]:
    val = [False] * n
    for _ in range(n + 1):
        changed = False
        for p in range(n - 1, -1, -1):
            if kind == "F":
                new = right[p] or val[succ(p)]
            else:
                new = right[p] or (left[p] and val[succ(p)])
            if new != val[p]:
                val[p] = new
                changed = True
        if not changed:
            break
    return val


def _gfp(right: list[bool], left: list[bool] | None, n: int,
         succ: Callable[[int], int], kind: str) -> list[bool]:
    val = [True] * n
    for _ in range(n + 1):
        changed = False
        for p in range(n - 1, -1, -1):
            if kind == "G":
                new = right[p] and val[succ(p)]
            else:
                new = right[p] or (left[p] and val[succ(p)])
            if new != val[p]:
                val[p] = new
                changed = True
        if not changed:
            break
    return val

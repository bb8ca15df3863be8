"""Abstract syntax and concrete-syntax parser for the quantum lambda calculus.

Concrete syntax::

    term  ::= fun x y .. -> term | \\x. term | lambda x. term
            | let (x, y) = term in term | let () = term in term
            | let x = term in term | let rec f x = term in term
            | letrec f x = term in term | if term then term else term
            | app
    app   ::= atom atom*
    atom  ::= x | tt | ff | () | (term) | (term, term, ..) | <term, term>
            | qinit | meas | box | unbox | GATE | GATE[angle]

``let x = M in N`` is sugar for ``(fun x -> N) M``. Tuples nest to the
right. ``--`` and ``#`` start comments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from .. import qnum

UNARY_GATES = ("H", "X", "Z", "S", "T", "NOT", "I")
PARAM_GATES = ("RX", "RY", "RZ")
GATE_ARITY = {g: 1 for g in UNARY_GATES + PARAM_GATES}
GATE_ARITY.update({"CNOT": 2, "SWAP": 2, "TOFFOLI": 3})
CONSTANTS = ("qinit", "meas", "box", "unbox")


class ParseError(SyntaxError):
    def __init__(self, msg, line, col):
        super().__init__(f"{line}:{col}: {msg}")
        self.line, self.col = line, col


# -- terms -----------------------------------------------------------------------

class Term:
    __slots__ = ()
    is_value = False


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str
    is_value = True


@dataclass(frozen=True, slots=True)
class Lam(Term):
    var: str
    body: Term
    is_value = True


@dataclass(frozen=True, slots=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class Pair(Term):
    left: Term
    right: Term

    @property
    def is_value(self):
        return self.left.is_value and self.right.is_value


@dataclass(frozen=True, slots=True)
class LetPair(Term):
    x: str
    y: str
    bound: Term
    body: Term


@dataclass(frozen=True, slots=True)
class Unit(Term):
    is_value = True


@dataclass(frozen=True, slots=True)
class LetUnit(Term):
    bound: Term
    body: Term


@dataclass(frozen=True, slots=True)
class Bool(Term):
    value: bool
    is_value = True


@dataclass(frozen=True, slots=True)
class If(Term):
    cond: Term
    then: Term
    else_: Term


@dataclass(frozen=True, slots=True)
class Const(Term):
    """qinit, meas, box, unbox or a gate. ``box_shape`` is set by elaboration."""

    name: str
    params: tuple = ()
    box_shape: Any = None
    is_value = True


@dataclass(frozen=True, slots=True)
class LetRec(Term):
    f: str
    x: str
    fbody: Term
    body: Term


@dataclass(frozen=True, slots=True, eq=False)
class CircLit(Term):
    """A circuit value; type circ(A, B)."""

    circuit: Any
    is_value = True


@dataclass(frozen=True, slots=True, eq=False)
class Unboxed(Term):
    """Runtime value produced by ``unbox``: a duplicable function replaying a circuit."""

    circuit: Any
    is_value = True


UNIT = Unit()
TT, FF = Bool(True), Bool(False)


def tuple_term(items):
    items = list(items)
    if not items:
        return UNIT
    out = items[-1]
    for t in reversed(items[:-1]):
        out = Pair(t, out)
    return out


def free_vars(t: Term) -> set:
    out: set = set()
    _fv(t, frozenset(), out)
    return out


def _fv(t, bound, out):
    while True:
        if isinstance(t, Var):
            if t.name not in bound:
                out.add(t.name)
            return
        if isinstance(t, Lam):
            bound = bound | {t.var}
            t = t.body
        elif isinstance(t, App):
            _fv(t.fn, bound, out)
            t = t.arg
        elif isinstance(t, Pair):
            _fv(t.left, bound, out)
            t = t.right
        elif isinstance(t, LetPair):
            _fv(t.bound, bound, out)
            bound = bound | {t.x, t.y}
            t = t.body
        elif isinstance(t, LetUnit):
            _fv(t.bound, bound, out)
            t = t.body
        elif isinstance(t, If):
            _fv(t.cond, bound, out)
            _fv(t.then, bound, out)
            t = t.else_
        elif isinstance(t, LetRec):
            _fv(t.fbody, bound | {t.f, t.x}, out)
            bound = bound | {t.f}
            t = t.body
        else:
            return


def size(t: Term) -> int:
    if isinstance(t, (Var, Unit, Bool, Const, CircLit, Unboxed)):
        return 1
    if isinstance(t, Lam):
        return 1 + size(t.body)
    if isinstance(t, App):
        return 1 + size(t.fn) + size(t.arg)
    if isinstance(t, Pair):
        return 1 + size(t.left) + size(t.right)
    if isinstance(t, LetPair):
        return 1 + size(t.bound) + size(t.body)
    if isinstance(t, LetUnit):
        return 1 + size(t.bound) + size(t.body)
    if isinstance(t, If):
        return 1 + size(t.cond) + size(t.then) + size(t.else_)
    if isinstance(t, LetRec):
        return 1 + size(t.fbody) + size(t.body)
    raise TypeError(t)


def pretty(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Bool):
        return "tt" if t.value else "ff"
    if isinstance(t, Unit):
        return "()"
    if isinstance(t, Const):
        if t.params:
            return f"{t.name}[{','.join(repr(p) for p in t.params)}]"
        return t.name
    if isinstance(t, CircLit):
        return f"<circuit {len(t.circuit.ops)} ops>"
    if isinstance(t, Unboxed):
        return f"<unboxed circuit {len(t.circuit.ops)} ops>"
    if isinstance(t, Lam):
        return f"fun {t.var} -> {pretty(t.body)}"
    if isinstance(t, App):
        f = pretty(t.fn)
        a = pretty(t.arg)
        if not isinstance(t.fn, (Var, Const, App, Bool, Unit, Pair)):
            f = f"({f})"
        if not isinstance(t.arg, (Var, Const, Bool, Unit, Pair)):
            a = f"({a})"
        return f"{f} {a}"
    if isinstance(t, Pair):
        return f"<{pretty(t.left)}, {pretty(t.right)}>"
    if isinstance(t, LetPair):
        return f"let ({t.x}, {t.y}) = {pretty(t.bound)} in {pretty(t.body)}"
    if isinstance(t, LetUnit):
        return f"let () = {pretty(t.bound)} in {pretty(t.body)}"
    if isinstance(t, If):
        return f"if {pretty(t.cond)} then {pretty(t.then)} else {pretty(t.else_)}"
    if isinstance(t, LetRec):
        return f"let rec {t.f} {t.x} = {pretty(t.fbody)} in {pretty(t.body)}"
    raise TypeError(t)


# -- lexer -------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|(?:--|\#)[^\n]*)
  | (?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|\(\)|[()<>,=.\\\[\]])
    """,
    re.VERBOSE,
)

KEYWORDS = {"fun", "lambda", "let", "rec", "letrec", "in", "if", "then", "else", "tt", "ff"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# -- parser ------------------------------------------------------------------------

class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def ident(self):
        tok = self.tok
        if tok.kind != "id" or tok.text in KEYWORDS:
            self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok.text

    def parse(self):
        t = self.term()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return t

    def term(self):
        tok = self.tok
        if tok.text in ("fun", "lambda") or tok.text == "\\":
            self.i += 1
            names = [self.ident()]
            while self.tok.kind == "id" and self.tok.text not in KEYWORDS:
                names.append(self.ident())
            if not (self.accept("->") or self.accept(".")):
                self.error("expected '->' or '.' after binder")
            body = self.term()
            for n in reversed(names):
                body = Lam(n, body)
            return body
        if tok.text == "letrec":
            self.i += 1
            return self._letrec()
        if tok.text == "let":
            self.i += 1
            if self.accept("rec"):
                return self._letrec()
            if self.accept("()"):
                self.expect("=")
                bound = self.term()
                self.expect("in")
                return LetUnit(bound, self.term())
            if self.accept("("):
                if self.accept(")"):
                    self.expect("=")
                    bound = self.term()
                    self.expect("in")
                    return LetUnit(bound, self.term())
                x = self.ident()
                self.expect(",")
                y = self.ident()
                self.expect(")")
                return self._letpair(x, y)
            if self.accept("<"):
                x = self.ident()
                self.expect(",")
                y = self.ident()
                self.expect(">")
                return self._letpair(x, y)
            x = self.ident()
            self.expect("=")
            bound = self.term()
            self.expect("in")
            return App(Lam(x, self.term()), bound)
        if tok.text == "if":
            self.i += 1
            c = self.term()
            self.expect("then")
            a = self.term()
            self.expect("else")
            return If(c, a, self.term())
        return self.app()

    def _letpair(self, x, y):
        if x == y:
            self.error(f"pattern binds {x!r} twice")
        self.expect("=")
        bound = self.term()
        self.expect("in")
        return LetPair(x, y, bound, self.term())

    def _letrec(self):
        f = self.ident()
        x = self.ident()
        self.expect("=")
        fbody = self.term()
        self.expect("in")
        return LetRec(f, x, fbody, self.term())

    def _starts_atom(self):
        tok = self.tok
        if tok.kind == "id":
            return tok.text not in KEYWORDS or tok.text in ("tt", "ff")
        return tok.text in ("(", "()", "<")

    def app(self):
        if not self._starts_atom():
            self.error(f"unexpected {self.tok.text or 'end of input'!r}")
        t = self.atom()
        while self._starts_atom():
            t = App(t, self.atom())
        # a trailing binder form is allowed as the last argument: f fun x -> ..
        if self.tok.text in ("fun", "lambda", "\\", "let", "if", "letrec"):
            t = App(t, self.term())
        return t

    def atom(self):
        tok = self.tok
        if tok.text == "tt":
            self.i += 1
            return TT
        if tok.text == "ff":
            self.i += 1
            return FF
        if tok.text == "()":
            self.i += 1
            return UNIT
        if tok.text == "(":
            self.i += 1
            if self.accept(")"):
                return UNIT
            items = [self.term()]
            while self.accept(","):
                items.append(self.term())
            self.expect(")")
            return tuple_term(items)
        if tok.text == "<":
            self.i += 1
            items = [self.term()]
            while self.accept(","):
                items.append(self.term())
            self.expect(">")
            if len(items) < 2:
                self.error("a pair needs two components", tok)
            return tuple_term(items)
        if tok.kind == "id":
            self.i += 1
            name = tok.text
            if name in CONSTANTS:
                return Const(name)
            if name in PARAM_GATES:
                self.expect("[")
                num = self.tok
                if num.kind != "num":
                    self.error("expected an angle")
                self.i += 1
                self.expect("]")
                return Const(name, (float(num.text),))
            if name in GATE_ARITY:
                return Const(name)
            return Var(name)
        self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse(text: str) -> Term:
    """Parse concrete syntax into a :class:`Term`; raises :class:`ParseError`."""
    return _Parser(text).parse()


def gate_matrix(c: Const):
    return qnum.gate_matrix("X" if c.name == "NOT" else c.name, c.params)

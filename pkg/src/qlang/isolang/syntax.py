"""Types, patterns and the concrete syntax of the iso language.

Surface syntax::

    type bool = 1 + 1
    type list(a) = mu X. 1 + a * X

    iso had : bool <-> bool {
      | ff <-> (sqrt(2)/2) * (ff + tt)
      | tt <-> (sqrt(2)/2) * (ff - tt)
    }
    iso map[g : a <-> b] : list(a) <-> list(b) fix f {
      | nil <-> nil
      | h :: t <-> g h :: f t
    }
    iso main = map[had]

``*`` binds tighter than ``+``; ``ff``/``tt`` stand for ``inl ()``/``inr ()``,
``nil`` for ``fold inl ()`` and ``h :: t`` for ``fold inr <h, t>``.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from itertools import count


class IsoSyntaxError(ValueError):
    def __init__(self, msg, line=None, col=None):
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(msg + where)
        self.msg, self.line, self.col = msg, line, col


# -- types ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class TVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class One:
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class Tensor:
    left: object
    right: object

    def __str__(self):
        return f"{_tparen(self.left, 1)} * {_tparen(self.right, 1)}"


@dataclass(frozen=True)
class Sum:
    left: object
    right: object

    def __str__(self):
        return f"{_tparen(self.left, 0)} + {_tparen(self.right, 0)}"


@dataclass(frozen=True)
class Mu:
    var: str
    body: object

    def __str__(self):
        return f"mu {self.var}. {self.body}"


@dataclass(frozen=True)
class Meta:
    """Unification variable; only appears while checking."""

    id: int

    def __str__(self):
        return f"?{self.id}"


def _tparen(t, level):
    # level 1 = inside a product
    if isinstance(t, Mu) or (level == 1 and isinstance(t, Sum)) or (level == 0 and isinstance(t, Sum)):
        return f"({t})"
    return str(t)


def free_tvars(t, bound=frozenset()) -> set:
    if isinstance(t, TVar):
        return set() if t.name in bound else {t.name}
    if isinstance(t, (Tensor, Sum)):
        return free_tvars(t.left, bound) | free_tvars(t.right, bound)
    if isinstance(t, Mu):
        return free_tvars(t.body, bound | {t.var})
    return set()


def subst_type(t, sub: dict):
    if not sub:
        return t
    if isinstance(t, TVar):
        return sub.get(t.name, t)
    if isinstance(t, Tensor):
        return Tensor(subst_type(t.left, sub), subst_type(t.right, sub))
    if isinstance(t, Sum):
        return Sum(subst_type(t.left, sub), subst_type(t.right, sub))
    if isinstance(t, Mu):
        inner = {k: v for k, v in sub.items() if k != t.var}
        clash = set().union(*(free_tvars(v) for v in inner.values())) if inner else set()
        if t.var in clash:
            fresh = _fresh_name(t.var, clash | free_tvars(t.body))
            body = subst_type(t.body, {t.var: TVar(fresh)})
            return Mu(fresh, subst_type(body, inner))
        return Mu(t.var, subst_type(t.body, inner))
    return t


def _fresh_name(base, avoid):
    for i in count(1):
        if f"{base}{i}" not in avoid:
            return f"{base}{i}"


def unfold(t: Mu):
    return subst_type(t.body, {t.var: t})


def type_eq(a, b, env=None) -> bool:
    """Structural equality, alpha-renaming μ binders."""
    env = env or {}
    if isinstance(a, TVar) and isinstance(b, TVar):
        return env.get(a.name, a.name) == b.name
    if type(a) is not type(b):
        return False
    if isinstance(a, (Tensor, Sum)):
        return type_eq(a.left, b.left, env) and type_eq(a.right, b.right, env)
    if isinstance(a, Mu):
        return type_eq(a.body, b.body, {**env, a.var: b.var})
    return a == b


def is_finite(t) -> bool:
    return not _has_mu(t) and not free_tvars(t)


def _has_mu(t):
    if isinstance(t, Mu):
        return True
    if isinstance(t, (Tensor, Sum)):
        return _has_mu(t.left) or _has_mu(t.right)
    return False


# -- patterns, values and right-hand sides ----------------------------------------------------

@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class Pair:
    left: object
    right: object


@dataclass(frozen=True)
class Inl:
    arg: object


@dataclass(frozen=True)
class Inr:
    arg: object


@dataclass(frozen=True)
class Fold:
    arg: object


@dataclass(frozen=True)
class IsoRef:
    """A reference to an iso by name, possibly instantiated: ``name[args]``."""

    name: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.name
        return f"{self.name}[{', '.join(str(a) for a in self.args)}]"


@dataclass(frozen=True)
class App:
    iso: IsoRef
    arg: object


@dataclass(frozen=True)
class Combo:
    """Formal linear combination of expressions."""

    terms: tuple  # of (complex, expr)


STAR = Star()
FF, TT = Inl(STAR), Inr(STAR)
NIL = Fold(Inl(STAR))


def cons(h, t):
    return Fold(Inr(Pair(h, t)))


def from_list(items) -> object:
    out = NIL
    for v in reversed(list(items)):
        out = cons(v, out)
    return out


def to_list(v) -> list:
    out = []
    while v != NIL:
        if not (isinstance(v, Fold) and isinstance(v.arg, Inr) and isinstance(v.arg.arg, Pair)):
            raise ValueError("not a list value")
        out.append(v.arg.arg.left)
        v = v.arg.arg.right
    return out


def pattern_vars(p) -> list:
    """Variables in occurrence order (with repetitions)."""
    if isinstance(p, PVar):
        return [p.name]
    if isinstance(p, Pair):
        return pattern_vars(p.left) + pattern_vars(p.right)
    if isinstance(p, (Inl, Inr, Fold)):
        return pattern_vars(p.arg)
    if isinstance(p, App):
        return pattern_vars(p.arg)
    if isinstance(p, Combo):
        return [v for _, t in p.terms for v in pattern_vars(t)]
    return []


def is_value(p) -> bool:
    if isinstance(p, Star):
        return True
    if isinstance(p, Pair):
        return is_value(p.left) and is_value(p.right)
    if isinstance(p, (Inl, Inr, Fold)):
        return is_value(p.arg)
    return False


def value_key(v):
    """Canonical order: ⋆ < inl < inr, pairs lexicographic, fold transparent."""
    if isinstance(v, Star):
        return ()
    if isinstance(v, Inl):
        return (0, value_key(v.arg))
    if isinstance(v, Inr):
        return (1, value_key(v.arg))
    if isinstance(v, Pair):
        return (value_key(v.left), value_key(v.right))
    if isinstance(v, Fold):
        return value_key(v.arg)
    raise TypeError(f"not a value: {v!r}")


def show(p) -> str:
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, Star):
        return "()"
    if p == FF:
        return "ff"
    if p == TT:
        return "tt"
    if p == NIL:
        return "nil"
    if isinstance(p, Fold) and isinstance(p.arg, Inr) and isinstance(p.arg.arg, Pair):
        return f"{_atom(p.arg.arg.left, cons_ok=False)} :: {show(p.arg.arg.right)}"
    if isinstance(p, Pair):
        return f"<{show(p.left)}, {show(p.right)}>"
    if isinstance(p, (Inl, Inr, Fold)):
        kw = {Inl: "inl", Inr: "inr", Fold: "fold"}[type(p)]
        return f"{kw} {_atom(p.arg)}"
    if isinstance(p, App):
        return f"{p.iso} {_atom(p.arg)}"
    if isinstance(p, Combo):
        parts = []
        for i, (c, t) in enumerate(p.terms):
            s = f"{format_amp(c)} * {_atom(t)}"
            parts.append(s if i == 0 else "+ " + s)
        return " ".join(parts)
    raise TypeError(f"cannot show {p!r}")


def _atom(p, cons_ok=False):
    s = show(p)
    simple = isinstance(p, (PVar, Star, Pair)) or p in (FF, TT, NIL)
    return s if simple else f"({s})"


def format_amp(c: complex) -> str:
    c = complex(c)
    re_, im = round(c.real, 12) + 0.0, round(c.imag, 12) + 0.0
    if im == 0:
        return f"{re_:.12g}"
    if re_ == 0:
        return f"({im:.12g}*i)"
    return f"({re_:.12g}{im:+.12g}*i)"


# -- declarations -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    name: str
    dom: object
    cod: object


@dataclass(frozen=True)
class IsoDef:
    name: str
    dom: object
    cod: object
    clauses: tuple  # of (lhs, rhs)
    params: tuple = ()
    fix: str | None = None
    line: int | None = None


@dataclass(frozen=True)
class IsoAlias:
    name: str
    ref: IsoRef
    line: int | None = None


@dataclass
class Program:
    types: dict = field(default_factory=dict)  # name -> (params, type)
    isos: dict = field(default_factory=dict)  # name -> IsoDef | IsoAlias
    order: list = field(default_factory=list)

    def last_iso(self) -> str:
        if "main" in self.isos:
            return "main"
        if not self.order:
            raise IsoSyntaxError("program declares no iso")
        return self.order[-1]


# -- lexer and parser -------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>(--|#)[^\n]*)"
    r"|(?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\d*\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym><->|::|[<>,()\[\]{}|*+\-/:=.;~])"
)
KEYWORDS = {"type", "iso", "fix", "mu", "inl", "inr", "fold", "nil", "tt", "ff"}
_SCALAR_FUNCS = {"sqrt": cmath.sqrt, "exp": cmath.exp, "cos": cmath.cos, "sin": cmath.sin}
_SCALAR_CONSTS = {"pi": math.pi, "i": 1j}


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list:
    out, line, start, pos = [], 1, 0, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise IsoSyntaxError(f"unexpected character {src[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            out.append(Tok(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Tok("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, src: str, type_aliases: dict | None = None):
        self.toks = tokenize(src)
        self.i = 0
        self.aliases = dict(type_aliases or {})

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def at(self, *texts) -> bool:
        return self.tok.text in texts and self.tok.kind in ("sym", "id")

    def next(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text) -> Tok:
        if self.tok.text != text:
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def ident(self) -> str:
        if self.tok.kind != "id" or self.tok.text in KEYWORDS:
            self.fail(f"expected an identifier, found {self.tok.text or 'end of input'!r}")
        return self.next().text

    def fail(self, msg):
        raise IsoSyntaxError(msg, self.tok.line, self.tok.col)

    # program
    def program(self) -> Program:
        prog = Program()
        while self.tok.kind != "eof":
            if self.at(";"):
                self.next()
                continue
            line = self.tok.line
            if self.at("type"):
                self.next()
                name = self.ident()
                params = self.ident_list("(", ")") if self.at("(") else []
                self.expect("=")
                body = self.type_(set(params))
                prog.types[name] = (tuple(params), body)
                self.aliases[name] = (tuple(params), body)
            elif self.at("iso"):
                d = self.iso_decl(line)
                if d.name in prog.isos:
                    raise IsoSyntaxError(f"iso {d.name!r} declared twice", line, 1)
                prog.isos[d.name] = d
                prog.order.append(d.name)
            else:
                self.fail(f"expected 'type' or 'iso', found {self.tok.text!r}")
        return prog

    def ident_list(self, open_, close):
        self.expect(open_)
        out = [self.ident()]
        while self.at(","):
            self.next()
            out.append(self.ident())
        self.expect(close)
        return out

    def iso_decl(self, line):
        self.expect("iso")
        name = self.ident()
        if self.at("="):
            self.next()
            return IsoAlias(name, self.iso_ref(), line)
        params = []
        if self.at("["):
            self.next()
            while True:
                pname = self.ident()
                self.expect(":")
                a = self.type_()
                self.expect("<->")
                b = self.type_()
                params.append(Param(pname, a, b))
                if not self.at(","):
                    break
                self.next()
            self.expect("]")
        self.expect(":")
        dom = self.type_()
        self.expect("<->")
        cod = self.type_()
        fix = None
        if self.at("fix"):
            self.next()
            fix = self.ident()
        self.expect("{")
        clauses = []
        if self.at("|"):
            self.next()
        while not self.at("}"):
            lhs = self.expr()
            self.expect("<->")
            rhs = self.expr()
            clauses.append((lhs, rhs))
            if self.at("|", ";"):
                self.next()
            elif not self.at("}"):
                self.fail("expected '|' or '}' after a clause")
        self.expect("}")
        return IsoDef(name, dom, cod, tuple(clauses), tuple(params), fix, line)

    def iso_ref(self) -> IsoRef:
        name = self.ident()
        args = []
        if self.at("["):
            self.next()
            args.append(self.iso_ref())
            while self.at(","):
                self.next()
                args.append(self.iso_ref())
            self.expect("]")
        return IsoRef(name, tuple(args))

    # types
    def type_(self, bound=frozenset()):
        left = self.prod(bound)
        if self.at("+"):
            self.next()
            return Sum(left, self.type_(bound))
        return left

    def prod(self, bound):
        left = self.tatom(bound)
        if self.at("*"):
            self.next()
            return Tensor(left, self.prod(bound))
        return left

    def tatom(self, bound):
        t = self.tok
        if t.kind == "num" and t.text == "1":
            self.next()
            return One()
        if self.at("("):
            self.next()
            ty = self.type_(bound)
            self.expect(")")
            return ty
        if self.at("mu"):
            self.next()
            var = self.ident()
            self.expect(".")
            return Mu(var, self.type_(set(bound) | {var}))
        if t.kind == "id" and t.text not in KEYWORDS:
            name = self.next().text
            if name in bound:
                return TVar(name)
            if name in self.aliases:
                params, body = self.aliases[name]
                args = []
                if self.at("("):
                    self.next()
                    args.append(self.type_(bound))
                    while self.at(","):
                        self.next()
                        args.append(self.type_(bound))
                    self.expect(")")
                if len(args) != len(params):
                    self.fail(f"type {name} takes {len(params)} argument(s), got {len(args)}")
                return subst_type(body, dict(zip(params, args)))
            return TVar(name)
        self.fail(f"expected a type, found {t.text or 'end of input'!r}")

    # expressions (patterns, values, right-hand sides)
    def expr(self):
        terms = [self.term()]
        while self.at("+", "-"):
            neg = self.next().text == "-"
            c, e = self.term()
            terms.append((-c if neg else c, e))
        if len(terms) == 1 and terms[0][0] == 1:
            return terms[0][1]
        return _flatten_combo(terms)

    def term(self):
        if self.at("-"):
            self.next()
            c, e = self.term()
            return -c, e
        save = self.i
        try:
            c = self.sfactor()
            if self.at("*"):
                self.next()
                c2, e = self.term()
                return c * c2, e
        except IsoSyntaxError:
            pass
        self.i = save
        return 1, self.cons()

    def cons(self):
        head = self.app()
        if self.at("::"):
            self.next()
            return cons(head, self.cons())
        return head

    def app(self):
        if self.at("inl", "inr", "fold"):
            kw = self.next().text
            arg = self.app()
            return {"inl": Inl, "inr": Inr, "fold": Fold}[kw](arg)
        t = self.tok
        if t.kind == "id" and t.text not in KEYWORDS:
            nxt = self.toks[self.i + 1]
            if nxt.text == "[" or self._starts_atom(nxt):
                ref = self.iso_ref()
                return App(ref, self.atom())
        return self.atom()

    def _starts_atom(self, t: Tok) -> bool:
        if t.kind == "id":
            return t.text not in KEYWORDS or t.text in ("nil", "tt", "ff")
        return t.text in ("(", "<")

    def atom(self):
        t = self.tok
        if self.at("("):
            self.next()
            if self.at(")"):
                self.next()
                return STAR
            e = self.expr()
            self.expect(")")
            return e
        if self.at("<"):
            self.next()
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(">")
            return Pair(a, b)
        if self.at("["):
            self.next()
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.at(","):
                    self.next()
                    items.append(self.expr())
            self.expect("]")
            return from_list(items)
        if self.at("nil"):
            self.next()
            return NIL
        if self.at("tt"):
            self.next()
            return TT
        if self.at("ff"):
            self.next()
            return FF
        if t.kind == "id" and t.text not in KEYWORDS:
            return PVar(self.next().text)
        self.fail(f"expected a pattern, found {t.text or 'end of input'!r}")

    # scalars
    def sfactor(self) -> complex:
        t = self.tok
        if t.kind == "num":
            self.next()
            return complex(float(t.text))
        if t.kind == "id" and t.text in _SCALAR_FUNCS:
            self.next()
            self.expect("(")
            v = self.sexpr()
            self.expect(")")
            return complex(_SCALAR_FUNCS[t.text](v))
        if t.kind == "id" and t.text in _SCALAR_CONSTS:
            self.next()
            return complex(_SCALAR_CONSTS[t.text])
        if self.at("("):
            self.next()
            v = self.sexpr()
            self.expect(")")
            return v
        if self.at("-"):
            self.next()
            return -self.sfactor()
        self.fail("expected a scalar")

    def sexpr(self) -> complex:
        v = self.sterm()
        while self.at("+", "-"):
            op = self.next().text
            w = self.sterm()
            v = v + w if op == "+" else v - w
        return v

    def sterm(self) -> complex:
        v = self.sfactor()
        while self.at("*", "/"):
            op = self.next().text
            w = self.sfactor()
            v = v * w if op == "*" else v / w
        return v


def _flatten_combo(terms) -> Combo:
    out = []
    for c, e in terms:
        if isinstance(e, Combo):
            out += [(c * c2, e2) for c2, e2 in e.terms]
        else:
            out.append((complex(c), e))
    return Combo(tuple(out))


def parse_program(src: str) -> Program:
    return _Parser(src).program()


def parse_type(src: str, aliases: dict | None = None):
    p = _Parser(src, aliases)
    t = p.type_()
    if p.tok.kind != "eof":
        p.fail("trailing input after type")
    return t


def parse_expr(src: str):
    """Parse a pattern, value, right-hand side or linear combination of values."""
    p = _Parser(src)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail("trailing input after expression")
    return e

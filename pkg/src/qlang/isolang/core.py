"""Checking, evaluation and matrix semantics of isos."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import count, product

import numpy as np

from .syntax import (
    App, Combo, Fold, Inl, Inr, IsoAlias, IsoDef, IsoRef, Meta, Mu, One, Pair, Program, PVar,
    STAR, Star, Sum, Tensor, TVar, format_amp, free_tvars, is_finite, is_value, parse_program,
    pattern_vars, show, subst_type, type_eq, unfold, value_key,
)

AMP_EPS = 1e-12
MAX_DIM = 1 << 12
DEFAULT_FUEL = 100_000
DEFAULT_DEPTH = 4


class IsoError(ValueError):
    pass


class IsoTypeError(IsoError):
    pass


class MatchError(IsoError):
    pass


class FuelExhausted(IsoError):
    pass


# -- runtime isos ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class Iso:
    """A closed iso: clauses in source orientation plus bindings for its iso parameters."""

    name: str
    dom: object
    cod: object
    clauses: tuple
    fix: str | None = None
    inverted: bool = False
    env: dict = field(default_factory=dict, compare=False, hash=False)
    module: "Module | None" = field(default=None, compare=False, hash=False)
    generic: frozenset = field(default=frozenset(), compare=False, hash=False)
    placeholder: bool = field(default=False, compare=False, hash=False)

    @property
    def type(self):
        return (self.cod, self.dom) if self.inverted else (self.dom, self.cod)

    def oriented(self) -> tuple:
        """Clauses as (match side, build side)."""
        return tuple((r, l) for l, r in self.clauses) if self.inverted else self.clauses

    def base(self) -> "Iso":
        return replace(self, inverted=False) if self.inverted else self

    def signature(self) -> str:
        a, b = self.type
        return f"{a} <-> {b}"

    def __str__(self):
        lines = [f"iso {self.name} : {self.signature()} {{"]
        for m, b in self.oriented():
            lines.append(f"  | {show(m)} <-> {show(b)}")
        lines.append("}")
        return "\n".join(lines)


def invert(iso: Iso) -> Iso:
    """Swap clause sides. Quantum isos only invert at the matrix level."""
    if is_quantum(iso):
        raise IsoError(f"iso {iso.name} has amplitude clauses; use the conjugate transpose of its matrix")
    return replace(iso, inverted=not iso.inverted)


def placeholder(name: str, dom, cod) -> Iso:
    return Iso(name, dom, cod, (), placeholder=True)


def seq(first: Iso, then: Iso) -> Iso:
    """``then ∘ first`` as the one-clause iso ``x <-> then (first x)``."""
    if not type_eq(first.type[1], then.type[0]):
        raise IsoTypeError(f"cannot compose {first.signature()} with {then.signature()}")
    env = {"#1": first, "#2": then}
    body = App(IsoRef("#2"), App(IsoRef("#1"), PVar("x")))
    return Iso(f"{then.name}.{first.name}", first.type[0], then.type[1], ((PVar("x"), body),),
               env=env, module=first.module or then.module)


# -- modules and resolution -----------------------------------------------------------------------

_rename_counter = count(1)


class Module:
    def __init__(self, program: Program):
        self.program = program
        self._cache: dict = {}

    @classmethod
    def parse(cls, src: str) -> "Module":
        return cls(parse_program(src))

    @property
    def names(self) -> list:
        return list(self.program.order)

    def type_alias(self, name):
        return self.program.types[name][1]

    def iso(self, ref, scope: dict | None = None) -> Iso:
        if isinstance(ref, str):
            from .syntax import _Parser
            p = _Parser(ref)
            ref = p.iso_ref()
        scope = scope or {}
        if ref.name in scope and not ref.args:
            return scope[ref.name]
        d = self.program.isos.get(ref.name)
        if d is None:
            raise IsoError(f"unknown iso {ref.name!r}")
        if isinstance(d, IsoAlias):
            if ref.args:
                raise IsoError(f"iso {ref.name!r} takes no arguments")
            return replace(self.iso(d.ref, scope), name=d.name)
        args = [self.iso(a, scope) for a in ref.args]
        if len(args) != len(d.params):
            raise IsoError(f"iso {d.name} takes {len(d.params)} iso argument(s), got {len(args)}")
        if not args:
            key = d.name
            if key not in self._cache:
                self._cache[key] = Iso(d.name, d.dom, d.cod, d.clauses, d.fix, module=self,
                                       generic=frozenset(free_tvars(d.dom) | free_tvars(d.cod)))
            return self._cache[key]
        # rename the definition's type variables apart before matching
        own = set()
        for t in [d.dom, d.cod] + [x for p in d.params for x in (p.dom, p.cod)]:
            own |= free_tvars(t)
        k = next(_rename_counter)
        ren = {v: TVar(f"{v}#{k}") for v in own}
        sub: dict = {}
        for p, a in zip(d.params, args):
            adom, acod = a.type
            if not (_match(subst_type(p.dom, ren), adom, sub) and _match(subst_type(p.cod, ren), acod, sub)):
                raise IsoTypeError(
                    f"argument {a.name} : {a.signature()} does not fit parameter "
                    f"{p.name} : {p.dom} <-> {p.cod} of {d.name}"
                )
        full = {v: sub.get(f"{v}#{k}", ren[v]) for v in own}
        dom, cod = subst_type(d.dom, full), subst_type(d.cod, full)
        leftover = frozenset(f"{v}#{k}" for v in own if f"{v}#{k}" not in sub)
        env = {p.name: a for p, a in zip(d.params, args)}
        return Iso(str(ref), dom, cod, d.clauses, d.fix, env=env, module=self, generic=leftover)

    def generic(self, name: str) -> Iso:
        """The definition with its iso parameters bound to opaque placeholders."""
        d = self.program.isos[name]
        if isinstance(d, IsoAlias):
            return self.iso(IsoRef(name))
        env = {p.name: placeholder(p.name, p.dom, p.cod) for p in d.params}
        return Iso(d.name, d.dom, d.cod, d.clauses, d.fix, env=env, module=self)


def _resolve(ref: IsoRef, owner: Iso) -> Iso:
    if ref.name == owner.fix and not ref.args:
        return owner.base()
    if ref.name in owner.env and not ref.args:
        return owner.env[ref.name]
    if owner.module is None:
        raise IsoError(f"unknown iso {ref.name!r}")
    return owner.module.iso(ref, owner.env)


def _match(pat, actual, sub: dict, bound=None) -> bool:
    """One-way matching of ``pat``'s free variables against ``actual``."""
    bound = bound or {}
    if isinstance(pat, TVar) and pat.name in bound:
        return isinstance(actual, TVar) and actual.name == bound[pat.name]
    if isinstance(pat, TVar) and "#" in pat.name:
        if pat.name in sub:
            return type_eq(sub[pat.name], actual)
        sub[pat.name] = actual
        return True
    if type(pat) is not type(actual):
        return False
    if isinstance(pat, (Tensor, Sum)):
        return _match(pat.left, actual.left, sub, bound) and _match(pat.right, actual.right, sub, bound)
    if isinstance(pat, Mu):
        return _match(pat.body, actual.body, sub, {**bound, pat.var: actual.var})
    return pat == actual


# -- amplitude values -----------------------------------------------------------------------------

@dataclass(frozen=True)
class AmpValue:
    terms: tuple  # of (complex, value), canonical order, distinct values

    @classmethod
    def of(cls, v) -> "AmpValue":
        return cls(((1 + 0j, v),))

    @classmethod
    def from_dict(cls, d: dict) -> "AmpValue":
        items = [(complex(a), v) for v, a in d.items() if abs(a) > AMP_EPS]
        items.sort(key=lambda t: value_key(t[1]))
        return cls(tuple(items))

    @classmethod
    def parse(cls, e) -> "AmpValue":
        """From a parsed value or linear combination of values."""
        if isinstance(e, Combo):
            d: dict = {}
            for c, v in e.terms:
                for c2, w in cls.parse(v).terms:
                    d[w] = d.get(w, 0) + c * c2
            return cls.from_dict(d)
        if not is_value(e):
            raise IsoError(f"{show(e)} is not a closed value")
        return cls.of(e)

    def as_dict(self) -> dict:
        return {v: a for a, v in self.terms}

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a, _ in self.terms)))

    def is_basis(self) -> bool:
        return len(self.terms) == 1 and abs(self.terms[0][0] - 1) <= AMP_EPS

    def close_to(self, other: "AmpValue", tol: float = 1e-9) -> bool:
        a, b = self.as_dict(), other.as_dict()
        return all(abs(a.get(k, 0) - b.get(k, 0)) <= tol for k in set(a) | set(b))

    def __str__(self):
        if self.is_basis():
            return show(self.terms[0][1])
        if not self.terms:
            return "0"
        return " + ".join(f"{format_amp(a)} * {_paren(show(v))}" for a, v in self.terms)


def _paren(s):
    return s if " " not in s else f"({s})"


# -- evaluation -----------------------------------------------------------------------------------

class _Fuel:
    def __init__(self, n):
        self.n = n

    def spend(self):
        self.n -= 1
        if self.n < 0:
            raise FuelExhausted("fuel exhausted while applying isos")


def apply(iso: Iso, v, fuel: int = DEFAULT_FUEL):
    """Apply a classical iso to a closed value."""
    if not is_value(v):
        raise IsoError(f"{show(v)} is not a closed value")
    out = _apply_basis(iso, v, _Fuel(fuel))
    av = AmpValue.from_dict(out)
    if not av.is_basis():
        raise IsoError(f"iso {iso.name} produced a superposition; use apply_quantum")
    return av.terms[0][1]


def apply_quantum(iso: Iso, av, fuel: int = DEFAULT_FUEL) -> AmpValue:
    """Linear extension of ``apply`` to formal combinations of values."""
    if not isinstance(av, AmpValue):
        av = AmpValue.parse(av)
    f = _Fuel(fuel)
    acc: dict = {}
    for a, v in av.terms:
        for w, b in _apply_basis(iso, v, f).items():
            acc[w] = acc.get(w, 0) + a * b
    return AmpValue.from_dict(acc)


def _apply_basis(iso: Iso, v, fuel: _Fuel) -> dict:
    if iso.placeholder:
        raise IsoError(f"iso parameter {iso.name} is not instantiated")
    fuel.spend()
    hit = None
    for i, (m, b) in enumerate(iso.oriented()):
        env = _match_value(m, v, iso, fuel)
        if env is None:
            continue
        if hit is not None:
            raise MatchError(f"value {show(v)} matches clauses {hit[0] + 1} and {i + 1} of {iso.name}")
        hit = (i, b, env)
    if hit is None:
        raise MatchError(f"no clause of {iso.name} matches {show(v)}")
    return _build(hit[1], hit[2], iso, fuel)


def _match_value(p, v, iso, fuel):
    if isinstance(p, PVar):
        return {p.name: v}
    if isinstance(p, Star):
        return {} if isinstance(v, Star) else None
    if isinstance(p, Pair):
        if not isinstance(v, Pair):
            return None
        a = _match_value(p.left, v.left, iso, fuel)
        if a is None:
            return None
        b = _match_value(p.right, v.right, iso, fuel)
        return None if b is None else {**a, **b}
    if isinstance(p, (Inl, Inr, Fold)):
        if type(v) is not type(p):
            return None
        return _match_value(p.arg, v.arg, iso, fuel)
    if isinstance(p, App):
        g = invert(_resolve(p.iso, iso))
        out = AmpValue.from_dict(_apply_basis(g, v, fuel))
        if not out.is_basis():
            raise IsoError("cannot match through a superposing iso")
        return _match_value(p.arg, out.terms[0][1], iso, fuel)
    if isinstance(p, Combo):
        raise IsoError("cannot match against a linear combination")
    raise IsoError(f"bad pattern {p!r}")


def _build(e, env, iso, fuel) -> dict:
    if isinstance(e, PVar):
        return {env[e.name]: 1}
    if isinstance(e, Star):
        return {STAR: 1}
    if isinstance(e, (Inl, Inr, Fold)):
        ctor = type(e)
        return {ctor(w): a for w, a in _build(e.arg, env, iso, fuel).items()}
    if isinstance(e, Pair):
        left = _build(e.left, env, iso, fuel)
        right = _build(e.right, env, iso, fuel)
        return {Pair(x, y): a * b for x, a in left.items() for y, b in right.items()}
    if isinstance(e, App):
        g = _resolve(e.iso, iso)
        acc: dict = {}
        for w, a in _build(e.arg, env, iso, fuel).items():
            for u, b in _apply_basis(g, w, fuel).items():
                acc[u] = acc.get(u, 0) + a * b
        return acc
    if isinstance(e, Combo):
        acc = {}
        for c, t in e.terms:
            for w, a in _build(t, env, iso, fuel).items():
                acc[w] = acc.get(w, 0) + c * a
        return acc
    raise IsoError(f"bad expression {e!r}")


# -- values of a type -----------------------------------------------------------------------------

def enumerate_values(t, depth: int = DEFAULT_DEPTH, limit: int = MAX_DIM) -> list:
    """Closed values of ``t`` in canonical order; μ-types keep at most ``depth`` nested folds."""
    out = _enum(t, depth, limit)
    out.sort(key=value_key)
    return out


def _enum(t, depth, limit):
    if isinstance(t, One):
        return [STAR]
    if isinstance(t, Sum):
        return [Inl(v) for v in _enum(t.left, depth, limit)] + [Inr(v) for v in _enum(t.right, depth, limit)]
    if isinstance(t, Tensor):
        a, b = _enum(t.left, depth, limit), _enum(t.right, depth, limit)
        if len(a) * len(b) > limit:
            raise IsoError(f"type {t} has more than {limit} values")
        return [Pair(x, y) for x, y in product(a, b)]
    if isinstance(t, Mu):
        if depth <= 0:
            return []
        return [Fold(v) for v in _enum(unfold(t), depth - 1, limit)]
    raise IsoError(f"type {t} is not closed")


def value_has_type(v, t) -> bool:
    if isinstance(t, Mu):
        return isinstance(v, Fold) and value_has_type(v.arg, unfold(t))
    if isinstance(t, One):
        return isinstance(v, Star)
    if isinstance(t, Tensor):
        return isinstance(v, Pair) and value_has_type(v.left, t.left) and value_has_type(v.right, t.right)
    if isinstance(t, Sum):
        if isinstance(v, Inl):
            return value_has_type(v.arg, t.left)
        return isinstance(v, Inr) and value_has_type(v.arg, t.right)
    return False


def to_matrix(iso: Iso, depth: int = DEFAULT_DEPTH, fuel: int = DEFAULT_FUEL) -> np.ndarray:
    """Column ``j`` is the image of the ``j``-th domain value in the canonical basis."""
    dom, cod = iso.type
    if free_tvars(dom) or free_tvars(cod):
        raise IsoError(f"iso {iso.name} has open type {iso.signature()}")
    xs = enumerate_values(dom, depth)
    ys = enumerate_values(cod, depth)
    if len(xs) > MAX_DIM or len(ys) > MAX_DIM:
        raise IsoError("matrix dimension over budget")
    index = {v: i for i, v in enumerate(ys)}
    m = np.zeros((len(ys), len(xs)), dtype=complex)
    for j, x in enumerate(xs):
        for a, y in apply_quantum(iso, AmpValue.of(x), fuel).terms:
            if y not in index:
                raise IsoError(f"image {show(y)} of {show(x)} lies outside the depth-{depth} truncation")
            m[index[y], j] = a
    return m


def is_quantum(iso: Iso, seen=None) -> bool:
    seen = set() if seen is None else seen
    if iso.placeholder:
        return False
    key = (iso.name, id(iso.module))
    if key in seen:
        return False
    seen.add(key)
    for l, r in iso.clauses:
        for e in (l, r):
            if _has_combo(e):
                return True
            for ref in _refs(e):
                try:
                    g = _resolve(ref, iso)
                except IsoError:
                    continue
                if is_quantum(g, seen):
                    return True
    return False


def _has_combo(e):
    if isinstance(e, Combo):
        return True
    if isinstance(e, Pair):
        return _has_combo(e.left) or _has_combo(e.right)
    if isinstance(e, (Inl, Inr, Fold, App)):
        return _has_combo(e.arg)
    return False


def _refs(e):
    if isinstance(e, App):
        yield e.iso
        yield from _refs(e.arg)
    elif isinstance(e, Pair):
        yield from _refs(e.left)
        yield from _refs(e.right)
    elif isinstance(e, (Inl, Inr, Fold)):
        yield from _refs(e.arg)
    elif isinstance(e, Combo):
        for _, t in e.terms:
            yield from _refs(t)


# -- checking -------------------------------------------------------------------------------------

@dataclass
class CheckResult:
    iso: Iso
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    quantum: bool = False

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def type(self) -> str:
        return self.iso.signature()

    def __str__(self):
        head = f"ok {self.iso.name} : {self.type}" if self.ok else f"rejected {self.iso.name}"
        lines = [head] + [f"  error: {e}" for e in self.errors] + [f"  warning: {w}" for w in self.warnings]
        return "\n".join(lines)


class _Types:
    """Unifier over iso types with metavariables."""

    def __init__(self):
        self.sub: dict = {}
        self.ids = count()

    def fresh(self) -> Meta:
        return Meta(next(self.ids))

    def resolve(self, t):
        while isinstance(t, Meta) and t.id in self.sub:
            t = self.sub[t.id]
        return t

    def zonk(self, t):
        t = self.resolve(t)
        if isinstance(t, Tensor):
            return Tensor(self.zonk(t.left), self.zonk(t.right))
        if isinstance(t, Sum):
            return Sum(self.zonk(t.left), self.zonk(t.right))
        if isinstance(t, Mu):
            return Mu(t.var, self.zonk(t.body))
        return t

    def unify(self, a, b):
        a, b = self.resolve(a), self.resolve(b)
        if isinstance(a, Meta):
            if a != b:
                self.sub[a.id] = b
            return
        if isinstance(b, Meta):
            self.sub[b.id] = a
            return
        if isinstance(a, (Tensor, Sum)) and type(a) is type(b):
            self.unify(a.left, b.left)
            self.unify(a.right, b.right)
            return
        if not type_eq(self.zonk(a), self.zonk(b)):
            raise IsoTypeError(f"type mismatch: {self.zonk(a)} vs {self.zonk(b)}")


def _type_pattern(p, t, tys: _Types, env: dict, where: str):
    t = tys.resolve(t)
    if isinstance(p, PVar):
        if p.name in env:
            raise IsoTypeError(f"{where}: variable {p.name} occurs twice")
        env[p.name] = t
        return
    if isinstance(p, Star):
        if not isinstance(t, One):
            raise IsoTypeError(f"{where}: () does not have type {tys.zonk(t)}")
        return
    if isinstance(p, Pair):
        if isinstance(t, Meta):
            tys.unify(t, Tensor(tys.fresh(), tys.fresh()))
            t = tys.resolve(t)
        if not isinstance(t, Tensor):
            raise IsoTypeError(f"{where}: {show(p)} does not have type {tys.zonk(t)}")
        _type_pattern(p.left, t.left, tys, env, where)
        _type_pattern(p.right, t.right, tys, env, where)
        return
    if isinstance(p, (Inl, Inr)):
        if isinstance(t, Meta):
            tys.unify(t, Sum(tys.fresh(), tys.fresh()))
            t = tys.resolve(t)
        if not isinstance(t, Sum):
            raise IsoTypeError(f"{where}: {show(p)} does not have type {tys.zonk(t)}")
        _type_pattern(p.arg, t.left if isinstance(p, Inl) else t.right, tys, env, where)
        return
    if isinstance(p, Fold):
        if not isinstance(t, Mu):
            raise IsoTypeError(f"{where}: {show(p)} does not have type {tys.zonk(t)}")
        _type_pattern(p.arg, unfold(t), tys, env, where)
        return
    raise IsoTypeError(f"{where}: {show(p)} is not a pattern")


def _check_expr(e, t, tys: _Types, env: dict, owner: Iso, used: list, where: str):
    """Check a right-hand side against ``t``; ``used`` collects variable occurrences."""
    if isinstance(e, PVar):
        if e.name not in env:
            raise IsoTypeError(f"{where}: variable {e.name} is not bound on the left")
        used.append(e.name)
        tys.unify(env[e.name], t)
        return
    if isinstance(e, App):
        g = _resolve(e.iso, owner)
        a, b = g.type
        if g.generic:
            sub = {v: tys.fresh() for v in g.generic}
            a, b = _subst_meta(a, sub), _subst_meta(b, sub)
        tys.unify(b, t)
        _check_expr(e.arg, a, tys, env, owner, used, where)
        return
    if isinstance(e, Combo):
        support = None
        for _, term in e.terms:
            sub_used: list = []
            _check_expr(term, t, tys, env, owner, sub_used, where)
            if len(set(sub_used)) != len(sub_used):
                raise IsoTypeError(f"{where}: a variable is used twice in {show(term)}")
            if support is not None and set(sub_used) != support:
                raise IsoTypeError(f"{where}: terms of a combination must use the same variables")
            support = set(sub_used)
        used.extend(sorted(support or ()))
        return
    if isinstance(e, Star):
        tys.unify(One(), t)
        return
    t = tys.resolve(t)
    if isinstance(e, Pair):
        if isinstance(t, Meta):
            tys.unify(t, Tensor(tys.fresh(), tys.fresh()))
            t = tys.resolve(t)
        if not isinstance(t, Tensor):
            raise IsoTypeError(f"{where}: {show(e)} does not have type {tys.zonk(t)}")
        _check_expr(e.left, t.left, tys, env, owner, used, where)
        _check_expr(e.right, t.right, tys, env, owner, used, where)
        return
    if isinstance(e, (Inl, Inr)):
        if isinstance(t, Meta):
            tys.unify(t, Sum(tys.fresh(), tys.fresh()))
            t = tys.resolve(t)
        if not isinstance(t, Sum):
            raise IsoTypeError(f"{where}: {show(e)} does not have type {tys.zonk(t)}")
        _check_expr(e.arg, t.left if isinstance(e, Inl) else t.right, tys, env, owner, used, where)
        return
    if isinstance(e, Fold):
        if not isinstance(t, Mu):
            raise IsoTypeError(f"{where}: {show(e)} needs a known inductive type, got {tys.zonk(t)}")
        _check_expr(e.arg, unfold(t), tys, env, owner, used, where)
        return
    raise IsoTypeError(f"{where}: bad expression {e!r}")


def _subst_meta(t, sub):
    if isinstance(t, TVar):
        return sub.get(t.name, t)
    if isinstance(t, Tensor):
        return Tensor(_subst_meta(t.left, sub), _subst_meta(t.right, sub))
    if isinstance(t, Sum):
        return Sum(_subst_meta(t.left, sub), _subst_meta(t.right, sub))
    if isinstance(t, Mu):
        return Mu(t.var, _subst_meta(t.body, {k: v for k, v in sub.items() if k != t.var}))
    return t


def _linear(used: list, env: dict, where: str):
    seen = set()
    for x in used:
        if x in seen:
            raise IsoTypeError(f"{where}: variable {x} is used twice on the right")
        seen.add(x)
    missing = set(env) - seen
    if missing:
        raise IsoTypeError(f"{where}: variable(s) {', '.join(sorted(missing))} unused on the right")


# pattern-matrix coverage (patterns are linear, so coverage is purely structural)

_WILD = PVar("_")


def _skeleton(e, fresh):
    """Erase iso applications into fresh variables."""
    if isinstance(e, App):
        return PVar(f"_{next(fresh)}")
    if isinstance(e, Pair):
        return Pair(_skeleton(e.left, fresh), _skeleton(e.right, fresh))
    if isinstance(e, (Inl, Inr, Fold)):
        return type(e)(_skeleton(e.arg, fresh))
    return e


def _ctors(t):
    if isinstance(t, One):
        return [(Star, [])]
    if isinstance(t, Tensor):
        return [(Pair, [t.left, t.right])]
    if isinstance(t, Sum):
        return [(Inl, [t.left]), (Inr, [t.right])]
    if isinstance(t, Mu):
        return [(Fold, [unfold(t)])]
    return None  # opaque


def _args(p, ctor):
    if isinstance(p, PVar):
        return None
    if type(p) is not ctor:
        return False
    if ctor is Star:
        return []
    if ctor is Pair:
        return [p.left, p.right]
    return [p.arg]


def _rebuild(ctor, args):
    if ctor is Star:
        return STAR
    if ctor is Pair:
        return Pair(*args)
    return ctor(args[0])


def uncovered(rows: list, types: list):
    """A witness vector of patterns matched by no row, or None when ``rows`` is exhaustive."""
    if not types:
        return None if rows else []
    t0 = types[0]
    heads = [r[0] for r in rows]
    ctors = _ctors(t0)
    if ctors is None or all(isinstance(h, PVar) for h in heads):
        rest = [r[1:] for r in rows if isinstance(r[0], PVar)]
        w = uncovered(rest, types[1:])
        return None if w is None else [_WILD] + w
    for ctor, sub_types in ctors:
        spec = []
        for r in rows:
            a = _args(r[0], ctor)
            if a is None:
                spec.append([_WILD] * len(sub_types) + r[1:])
            elif a is not False:
                spec.append(a + r[1:])
        w = uncovered(spec, sub_types + types[1:])
        if w is not None:
            k = len(sub_types)
            return [_rebuild(ctor, w[:k])] + w[k:]
    return None


def overlap(p, q) -> bool:
    if isinstance(p, PVar) or isinstance(q, PVar):
        return True
    if type(p) is not type(q):
        return False
    if isinstance(p, Star):
        return True
    if isinstance(p, Pair):
        return overlap(p.left, q.left) and overlap(p.right, q.right)
    return overlap(p.arg, q.arg)


def _coverage(patterns, t, side, errors):
    w = uncovered([[p] for p in patterns], [t])
    if w is not None:
        errors.append(f"{side} patterns are not exhaustive: {show(w[0])} is not covered")
    for i in range(len(patterns)):
        for j in range(i + 1, len(patterns)):
            if overlap(patterns[i], patterns[j]):
                errors.append(f"{side} patterns of clauses {i + 1} and {j + 1} overlap")


def structural_guard(iso: Iso) -> list:
    """Warnings for recursive calls not made on a variable bound strictly under a fold."""
    if iso.fix is None:
        return []
    out = []
    for i, (lhs, rhs) in enumerate(iso.clauses):
        under = _vars_under_fold(lhs, False)
        for app in _apps(rhs):
            if app.iso.name != iso.fix or app.iso.args:
                continue
            arg = app.arg
            if not (isinstance(arg, PVar) and arg.name in under):
                out.append(
                    f"clause {i + 1}: recursive call {iso.fix} {show(arg)} is not on a strict sub-pattern"
                )
    return out


def _vars_under_fold(p, inside):
    if isinstance(p, PVar):
        return {p.name} if inside else set()
    if isinstance(p, Pair):
        return _vars_under_fold(p.left, inside) | _vars_under_fold(p.right, inside)
    if isinstance(p, Fold):
        return _vars_under_fold(p.arg, True)
    if isinstance(p, (Inl, Inr)):
        return _vars_under_fold(p.arg, inside)
    return set()


def _apps(e):
    if isinstance(e, App):
        yield e
        yield from _apps(e.arg)
    elif isinstance(e, Pair):
        yield from _apps(e.left)
        yield from _apps(e.right)
    elif isinstance(e, (Inl, Inr, Fold)):
        yield from _apps(e.arg)
    elif isinstance(e, Combo):
        for _, t in e.terms:
            yield from _apps(t)


def check_iso(iso: Iso, depth: int = DEFAULT_DEPTH, tol: float = 1e-9) -> CheckResult:
    """Typing, linearity, coverage on both sides, and unitarity for amplitude clauses."""
    res = CheckResult(iso)
    dom, cod = iso.dom, iso.cod
    quantum_clauses = any(_has_combo(r) or _has_combo(l) for l, r in iso.clauses)
    lhs_pats, rhs_skel = [], []
    fresh = count()
    for i, (lhs, rhs) in enumerate(iso.clauses):
        where = f"clause {i + 1}"
        tys = _Types()
        env: dict = {}
        try:
            if _has_combo(lhs) or any(True for _ in _apps(lhs)):
                raise IsoTypeError(f"{where}: left side must be a pattern")
            _type_pattern(lhs, dom, tys, env, where)
            used: list = []
            _check_expr(rhs, cod, tys, env, iso, used, where)
            if not isinstance(rhs, Combo):
                _linear(used, env, where)
        except IsoError as e:
            res.errors.append(str(e))
            continue
        lhs_pats.append(lhs)
        if not isinstance(rhs, Combo):
            rhs_skel.append(_skeleton(rhs, fresh))
    if res.errors:
        return res
    _coverage(lhs_pats, dom, "left", res.errors)
    if not quantum_clauses:
        _coverage(rhs_skel, cod, "right", res.errors)
    res.warnings += structural_guard(iso)
    try:
        res.quantum = is_quantum(iso)
    except IsoError:
        res.quantum = quantum_clauses
    if res.quantum and not res.errors:
        if free_tvars(dom) or free_tvars(cod) or any(g.placeholder for g in iso.env.values()):
            res.warnings.append("unitarity is checked per instantiation")
        else:
            try:
                m = to_matrix(iso, depth)
                if m.shape[0] != m.shape[1] and is_finite(dom) and is_finite(cod):
                    res.errors.append(f"domain and codomain sizes differ: {m.shape[1]} vs {m.shape[0]}")
                else:
                    gram = m.conj().T @ m
                    err = float(np.max(np.abs(gram - np.eye(m.shape[1])))) if m.size else 0.0
                    if err > tol:
                        res.errors.append(f"clauses are not unitary: |U†U - I| = {err:.3g}")
                    if not (is_finite(dom) and is_finite(cod)):
                        res.warnings.append(f"unitarity checked on the depth-{depth} truncation only")
            except IsoError as e:
                res.errors.append(str(e))
    return res

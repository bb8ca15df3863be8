"""Linear type inference for the quantum lambda calculus.

Terms carry no annotations, so types are inferred by unification. The
exponential ``!`` only ever decorates function types, so every function
type carries a *duplicability flag*. Flags are solved after unification
from three kinds of constraints:

* a variable used other than exactly once (or differently in the two
  branches of an ``if``) must have a flagged function type;
* a lambda may only be flagged if every variable it captures is flagged
  (promotion applies to values whose free variables are all duplicable);
* an occurrence of a flagged variable may be used unflagged (dereliction
  at the leaf), never the reverse.

Unresolved flags default to unflagged, except the outermost one, which is
set whenever that is consistent so closed values get their promoted type.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .syntax import (
    App, Bool, CircLit, Const, GATE_ARITY, If, Lam, LetPair, LetRec, LetUnit, Pair, Term,
    Unboxed, Unit, Var,
)
from .. import circuit as circ_mod


class QTypeError(TypeError):
    pass


class LinearityError(QTypeError):
    pass


class PromotionError(QTypeError):
    pass


# -- public types ------------------------------------------------------------------

class QType:
    __slots__ = ()


@dataclass(frozen=True)
class QBit(QType):
    def __str__(self):
        return "qbit"


@dataclass(frozen=True)
class BitT(QType):
    def __str__(self):
        return "bit"


@dataclass(frozen=True)
class UnitT(QType):
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class Tensor(QType):
    left: QType
    right: QType

    def __str__(self):
        lft = f"({self.left})" if isinstance(self.left, (Tensor, Lolli)) else str(self.left)
        rgt = f"({self.right})" if isinstance(self.right, Lolli) else str(self.right)
        return f"{lft} * {rgt}"


@dataclass(frozen=True)
class Lolli(QType):
    arg: QType
    res: QType

    def __str__(self):
        a = f"({self.arg})" if isinstance(self.arg, Lolli) else str(self.arg)
        return f"{a} -o {self.res}"


@dataclass(frozen=True)
class Bang(QType):
    inner: QType

    def __str__(self):
        return f"!({self.inner})"


@dataclass(frozen=True)
class CircT(QType):
    inp: QType
    out: QType

    def __str__(self):
        return f"circ({self.inp}, {self.out})"


@dataclass(frozen=True)
class TypeVar(QType):
    name: str

    def __str__(self):
        return self.name


QBIT, BIT, UNIT_T = QBit(), BitT(), UnitT()


def tensor_power(t: QType, n: int) -> QType:
    if n == 0:
        return UNIT_T
    out = t
    for _ in range(n - 1):
        out = Tensor(t, out)
    return out


def flatten_tensor(t: QType) -> list:
    """Right-nested tensor components; ``1`` is the empty product."""
    if isinstance(t, UnitT):
        return []
    out = []
    while isinstance(t, Tensor):
        out.append(t.left)
        t = t.right
    out.append(t)
    return out


# -- internal representation -----------------------------------------------------------

class _Flag:
    __slots__ = ("parent", "value", "why")

    def __init__(self, value=None, why=""):
        self.parent = None
        self.value = value
        self.why = why


def _find(f: _Flag) -> _Flag:
    root = f
    while root.parent is not None:
        root = root.parent
    while f.parent is not None:
        f.parent, f = root, f.parent
    return root


class _TV:
    __slots__ = ("ref", "id")
    _counter = 0

    def __init__(self):
        self.ref = None
        _TV._counter += 1
        self.id = _TV._counter


class _Base:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


_QBIT, _BIT, _UNIT = _Base("qbit"), _Base("bit"), _Base("1")


class _Tensor:
    __slots__ = ("l", "r")

    def __init__(self, l, r):
        self.l, self.r = l, r


class _Fn:
    __slots__ = ("a", "b", "flag", "forced")

    def __init__(self, a, b, flag, forced=""):
        self.a, self.b, self.flag = a, b, flag
        self.forced = forced  # set when a variable's unknown type had to be duplicable


class _Circ:
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b


def _prune(t):
    while isinstance(t, _TV) and t.ref is not None:
        t = t.ref
    return t


def _occurs(v, t):
    t = _prune(t)
    if t is v:
        return True
    if isinstance(t, (_Tensor,)):
        return _occurs(v, t.l) or _occurs(v, t.r)
    if isinstance(t, (_Fn, _Circ)):
        return _occurs(v, t.a) or _occurs(v, t.b)
    return False


def _show(t) -> str:
    t = _prune(t)
    if isinstance(t, _TV):
        return f"'t{t.id}"
    if isinstance(t, _Base):
        return t.name
    if isinstance(t, _Tensor):
        return f"({_show(t.l)} * {_show(t.r)})"
    if isinstance(t, _Fn):
        f = _find(t.flag)
        s = f"({_show(t.a)} -o {_show(t.b)})"
        return f"!{s}" if f.value is True else s
    if isinstance(t, _Circ):
        return f"circ({_show(t.a)}, {_show(t.b)})"
    return "?"


@dataclass
class _Ctx:
    """Mutable inference state shared across one check."""

    flag_eqs: list
    implies: list  # (g, target-type-or-flag, why)
    boxes: list

    def new_flag(self, value=None, why=""):
        return _Flag(value, why)


class _Checker:
    def __init__(self):
        self.implies = []  # (flag g, flag f, reason): g => f
        self.forced = []  # (flag, bool, reason)
        self.captures = []  # (lambda flag, var type, var name)
        self.boxes = []

    # -- unification --------------------------------------------------------------

    def unify(self, a, b, where=""):
        a, b = _prune(a), _prune(b)
        if a is b:
            return
        if isinstance(a, _TV):
            if _occurs(a, b):
                raise QTypeError(f"infinite type {_show(a)} = {_show(b)}{where}")
            a.ref = b
            return
        if isinstance(b, _TV):
            self.unify(b, a, where)
            return
        if isinstance(a, _Base) and isinstance(b, _Base) and a.name == b.name:
            return
        if isinstance(a, _Tensor) and isinstance(b, _Tensor):
            self.unify(a.l, b.l, where)
            self.unify(a.r, b.r, where)
            return
        if isinstance(a, _Fn) and isinstance(b, _Fn):
            self.unify(a.a, b.a, where)
            self.unify(a.b, b.b, where)
            self.union_flags(a.flag, b.flag)
            return
        if isinstance(a, _Circ) and isinstance(b, _Circ):
            self.unify(a.a, b.a, where)
            self.unify(a.b, b.b, where)
            return
        for x, y in ((a, b), (b, a)):
            if isinstance(x, _Fn) and x.forced:
                raise LinearityError(f"{x.forced} but its type {_show(y)} is linear")
        raise QTypeError(f"type mismatch: {_show(a)} vs {_show(b)}{where}")

    def union_flags(self, f, g):
        f, g = _find(f), _find(g)
        if f is g:
            return
        if f.value is not None and g.value is not None and f.value != g.value:
            raise PromotionError(
                f"cannot reconcile duplicable and linear function types ({f.why or g.why})"
            )
        if f.value is None:
            f.value = g.value
        f.why = f.why or g.why
        g.parent = f

    # -- helpers ------------------------------------------------------------------------

    def fn(self, a, b, flag=None):
        return _Fn(a, b, flag if flag is not None else _Flag())

    def require_dup(self, t, name, count):
        """Variable ``name`` of type ``t`` is used ``count`` != 1 times."""
        why = (
            f"variable {name!r} is discarded" if count == 0 else f"variable {name!r} is used {count} times"
        )
        t = _prune(t)
        if isinstance(t, _TV):
            t.ref = _Fn(_TV(), _TV(), _Flag(True, why), forced=why)
            return
        if isinstance(t, _Fn):
            f = _find(t.flag)
            if f.value is False:
                raise LinearityError(f"{why} but its function type is linear ({f.why})")
            f.value = True
            f.why = f.why or why
            return
        raise LinearityError(f"{why} but its type {_show(t)} is linear")

    def const_type(self, c: Const):
        n = c.name
        if n == "qinit":
            return self.fn(_BIT, _QBIT)
        if n == "meas":
            return self.fn(_QBIT, _BIT)
        if n == "box":
            a, b = _TV(), _TV()
            self.boxes.append((a, b))
            return self.fn(self.fn(a, b, _Flag(True, "box argument")), _Circ(a, b))
        if n == "unbox":
            a, b = _TV(), _TV()
            self.boxes.append((a, b))
            return self.fn(_Circ(a, b), self.fn(a, b, _Flag(True, "unbox result")))
        if n in GATE_ARITY:
            q = _qbit_power(GATE_ARITY[n])
            return self.fn(q, q)
        raise QTypeError(f"unknown constant {n!r}")

    # -- inference --------------------------------------------------------------------------

    def infer(self, t: Term, env: dict):
        """Return ``(type, uses)``; ``uses`` counts free-variable occurrences."""
        if isinstance(t, Var):
            if t.name not in env:
                raise QTypeError(f"unbound variable {t.name!r}")
            ty = _prune(env[t.name])
            if isinstance(ty, _Fn):
                # dereliction at the leaf: a flagged binder may be used unflagged
                occ = _Fn(ty.a, ty.b, _Flag())
                self.implies.append((occ.flag, ty.flag, t.name))
                return occ, {t.name: 1}
            return ty, {t.name: 1}
        if isinstance(t, Bool):
            return _BIT, {}
        if isinstance(t, Unit):
            return _UNIT, {}
        if isinstance(t, Const):
            return self.const_type(t), {}
        if isinstance(t, CircLit):
            a, b = _interface_types(t.circuit)
            return _Circ(a, b), {}
        if isinstance(t, Unboxed):
            a, b = _interface_types(t.circuit)
            return self.fn(a, b, _Flag(True, "unboxed circuit")), {}
        if isinstance(t, Lam):
            a = _TV()
            inner = dict(env)
            inner[t.var] = a
            b, uses = self.infer(t.body, inner)
            count = uses.pop(t.var, 0)
            if count != 1:
                self.require_dup(a, t.var, count)
            flag = _Flag()
            for v in uses:
                self.captures.append((flag, env[v], v))
            return _Fn(a, b, flag), uses
        if isinstance(t, App):
            ft, u1 = self.infer(t.fn, env)
            at, u2 = self.infer(t.arg, env)
            res = _TV()
            self.unify(ft, self.fn(at, res), " in application")
            return res, _add(u1, u2)
        if isinstance(t, Pair):
            lt, u1 = self.infer(t.left, env)
            rt, u2 = self.infer(t.right, env)
            return _Tensor(lt, rt), _add(u1, u2)
        if isinstance(t, LetPair):
            bt, u1 = self.infer(t.bound, env)
            a, b = _TV(), _TV()
            self.unify(bt, _Tensor(a, b), " in let-pair")
            inner = dict(env)
            inner[t.x], inner[t.y] = a, b
            ct, u2 = self.infer(t.body, inner)
            for v, ty in ((t.x, a), (t.y, b)):
                count = u2.pop(v, 0)
                if count != 1:
                    self.require_dup(ty, v, count)
            return ct, _add(u1, u2)
        if isinstance(t, LetUnit):
            bt, u1 = self.infer(t.bound, env)
            self.unify(bt, _UNIT, " in let-unit")
            ct, u2 = self.infer(t.body, env)
            return ct, _add(u1, u2)
        if isinstance(t, If):
            pt, u1 = self.infer(t.cond, env)
            self.unify(pt, _BIT, " in if-condition")
            mt, um = self.infer(t.then, env)
            nt, un = self.infer(t.else_, env)
            self.unify(mt, nt, " between if-branches")
            merged = {}
            for v in um.keys() | un.keys():
                cm, cn = um.get(v, 0), un.get(v, 0)
                # branches share one linear context; any disagreement needs duplication
                merged[v] = cm if cm == cn else 2
            return mt, _add(u1, merged)
        if isinstance(t, LetRec):
            a, b = _TV(), _TV()
            fty = self.fn(a, b, _Flag(True, f"recursive function {t.f!r}"))
            inner = dict(env)
            inner[t.f] = fty
            inner[t.x] = a
            _, uf = self.infer_against(t.fbody, inner, b)
            uf.pop(t.f, None)
            count = uf.pop(t.x, 0)
            if count != 1:
                self.require_dup(a, t.x, count)
            for v in uf:
                # the body is copied at each unfolding
                self.require_dup(env[v], v, 2)
            outer = dict(env)
            outer[t.f] = fty
            ct, u2 = self.infer(t.body, outer)
            u2.pop(t.f, None)
            return ct, _add(uf, u2)
        raise QTypeError(f"cannot type {t!r}")

    def infer_against(self, t, env, expected):
        ty, uses = self.infer(t, env)
        self.unify(ty, expected)
        return ty, uses

    # -- flag solving -------------------------------------------------------------------------

    def solve(self, top):
        # a capturing lambda may only be flagged if the captured variable is
        for lam_flag, vty, name in self.captures:
            vty = _prune(vty)
            if isinstance(vty, _Fn):
                self.implies.append((lam_flag, vty.flag, f"captures {name!r}"))
            else:
                self.forced.append((lam_flag, False, f"captures linear variable {name!r}"))
        for f, val, why in self.forced:
            r = _find(f)
            if r.value is not None and r.value != val:
                raise PromotionError(f"function must be duplicable but {why}")
            r.value = val
            r.why = r.why or why
        self._propagate()
        top = _prune(top)
        if isinstance(top, _Fn):
            r = _find(top.flag)
            if r.value is None:
                snapshot = self._snapshot()
                r.value = True
                try:
                    self._propagate()
                except PromotionError:
                    self._restore(snapshot)
                    r.value = False
                    self._propagate()

    def _snapshot(self):
        flags = set()
        for g, f, _ in self.implies:
            flags.add(_find(g))
            flags.add(_find(f))
        return {fl: fl.value for fl in flags}

    def _restore(self, snap):
        for fl, v in snap.items():
            fl.value = v

    def _propagate(self):
        changed = True
        while changed:
            changed = False
            for g, f, why in self.implies:
                rg, rf = _find(g), _find(f)
                if rg.value is True and rf.value is not True:
                    if rf.value is False:
                        raise PromotionError(
                            f"a duplicable value would need {why!r} duplicable, but {rf.why or 'it is linear'}"
                        )
                    rf.value = True
                    rf.why = rf.why or rg.why
                    changed = True
                elif rf.value is False and rg.value is not False:
                    if rg.value is True:
                        raise PromotionError(
                            f"{rg.why or 'a duplicable function'} cannot be duplicable: {rf.why or why}"
                        )
                    rg.value = False
                    rg.why = rg.why or rf.why
                    changed = True

    # -- export --------------------------------------------------------------------------------

    def export(self, t, names) -> QType:
        t = _prune(t)
        if isinstance(t, _TV):
            if t.id not in names:
                names[t.id] = "'" + _letter(len(names))
            return TypeVar(names[t.id])
        if isinstance(t, _Base):
            return {"qbit": QBIT, "bit": BIT, "1": UNIT_T}[t.name]
        if isinstance(t, _Tensor):
            return Tensor(self.export(t.l, names), self.export(t.r, names))
        if isinstance(t, _Circ):
            return CircT(self.export(t.a, names), self.export(t.b, names))
        if isinstance(t, _Fn):
            inner = Lolli(self.export(t.a, names), self.export(t.b, names))
            return Bang(inner) if _find(t.flag).value is True else inner
        raise TypeError(t)


def _letter(i):
    s = chr(ord("a") + i % 26)
    return s if i < 26 else s + str(i // 26)


def _add(u1, u2):
    if not u1:
        return dict(u2)
    out = dict(u1)
    for k, v in u2.items():
        out[k] = out.get(k, 0) + v
    return out


def _qbit_power(n):
    if n == 0:
        return _UNIT
    out = _QBIT
    for _ in range(n - 1):
        out = _Tensor(_QBIT, out)
    return out


def _kind_type(kind):
    return _QBIT if kind == circ_mod.QBIT else _BIT


def _nested(items):
    if not items:
        return _UNIT
    out = items[-1]
    for t in reversed(items[:-1]):
        out = _Tensor(t, out)
    return out


def _interface_types(c):
    return _nested([_kind_type(k) for _, k in c.inputs]), _nested([_kind_type(k) for _, k in c.outputs])


def _import(t: QType, vars_: dict):
    if isinstance(t, QBit):
        return _QBIT
    if isinstance(t, BitT):
        return _BIT
    if isinstance(t, UnitT):
        return _UNIT
    if isinstance(t, Tensor):
        return _Tensor(_import(t.left, vars_), _import(t.right, vars_))
    if isinstance(t, Lolli):
        return _Fn(_import(t.arg, vars_), _import(t.res, vars_), _Flag(False, "declared linear"))
    if isinstance(t, Bang):
        inner = t.inner
        if not isinstance(inner, Lolli):
            raise QTypeError(f"! only applies to function types, not {inner}")
        return _Fn(_import(inner.arg, vars_), _import(inner.res, vars_), _Flag(True, "declared duplicable"))
    if isinstance(t, CircT):
        return _Circ(_import(t.inp, vars_), _import(t.out, vars_))
    if isinstance(t, TypeVar):
        return vars_.setdefault(t.name, _TV())
    raise TypeError(t)


# -- elaboration of box sites ----------------------------------------------------------------

def _shape(t, default_qbit=True) -> QType:
    t = _prune(t)
    if isinstance(t, _TV):
        t.ref = _QBIT
        return QBIT
    if isinstance(t, _Base):
        return {"qbit": QBIT, "bit": BIT, "1": UNIT_T}[t.name]
    if isinstance(t, _Tensor):
        return Tensor(_shape(t.l), _shape(t.r))
    raise QTypeError(f"circuit interfaces must be built from qbit, bit and 1, not {_show(t)}")


# -- public API ----------------------------------------------------------------------------------

@dataclass
class CheckResult:
    type: QType
    term: Term  # with box sites elaborated


def check(term: Term, ctx: Optional[dict] = None, expected: Optional[QType] = None) -> CheckResult:
    """Infer the type of ``term`` under ``ctx`` (name -> QType, each used linearly).

    With ``expected``, the term must be typable at that type (type variables
    in it are flexible). Raises :class:`QTypeError` subclasses on rejection.
    """
    ch = _Checker()
    env = {}
    tvars: dict = {}
    for name, ty in (ctx or {}).items():
        env[name] = _import(ty, tvars)
    ty, uses = ch.infer(term, env)
    for name in env:
        count = uses.get(name, 0)
        if count != 1:
            ch.require_dup(env[name], name, count)
    if expected is not None:
        ch.unify(ty, _import(expected, tvars), " against the expected type")
    ch.solve(ty)
    for a, b in ch.boxes:
        _shape(a)
        _shape(b)
    elaborated = _elaborate(term, ch) if ch.boxes else term
    return CheckResult(ch.export(ty, {}), elaborated)


def typecheck(term: Term, ctx: Optional[dict] = None) -> QType:
    return check(term, ctx).type


def _elaborate(term, ch):
    """Attach resolved interface shapes to every ``box`` constant."""
    # box sites are recorded in inference order, which matches this traversal order
    sites = iter([(a, b) for a, b in ch.boxes])
    kinds = []

    def walk(t):
        if isinstance(t, Const) and t.name in ("box", "unbox"):
            a, b = next(sites)
            if t.name == "box":
                return Const("box", t.params, (_shape(a), _shape(b)))
            return t
        if isinstance(t, Lam):
            return Lam(t.var, walk(t.body))
        if isinstance(t, App):
            return App(walk(t.fn), walk(t.arg))
        if isinstance(t, Pair):
            return Pair(walk(t.left), walk(t.right))
        if isinstance(t, LetPair):
            return LetPair(t.x, t.y, walk(t.bound), walk(t.body))
        if isinstance(t, LetUnit):
            return LetUnit(walk(t.bound), walk(t.body))
        if isinstance(t, If):
            return If(walk(t.cond), walk(t.then), walk(t.else_))
        if isinstance(t, LetRec):
            return LetRec(t.f, t.x, walk(t.fbody), walk(t.body))
        return t

    return walk(term)

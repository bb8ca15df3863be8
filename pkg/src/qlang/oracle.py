"""Compile boolean functional programs to reversible oracles.

Terms are call-by-value lambda terms over booleans with ``not``, ``and``,
pairs, ``if`` and ``let rec``. :func:`synth_landauer` partially evaluates
a term whose free variables are circuit wires: everything that depends
only on static data is reduced at compile time, and each boolean operator
applied to wire data emits a small reversible block. :func:`bennett_wrap`
turns the resulting garbage-producing embedding into a clean oracle
``(x, y) -> (x, y xor f(x))``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Optional

from . import circuit as circ_mod
from .circuit import Circuit, Discard, Gate, Init
from .qlc import syntax as S


class OracleError(ValueError):
    pass


class StaticRecursionError(OracleError):
    """Recursion did not unroll at compile time."""


PRIMS = ("not", "and")


# -- parsing ----------------------------------------------------------------------------

class _BoolParser(S._Parser):
    def atom(self):
        tok = self.tok
        if tok.kind == "id" and tok.text not in S.KEYWORDS:
            self.i += 1
            if tok.text in PRIMS:
                return S.Const(tok.text)
            return S.Var(tok.text)
        return super().atom()


def parse_bool(text: str) -> S.Term:
    """Parse a boolean program; ``not`` and ``and`` are the primitives."""
    return _BoolParser(text).parse()


def input_names(term: S.Term) -> list:
    """Free variables in natural order (x2 before x10)."""
    def key(n):
        return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", n)]

    return sorted(S.free_vars(term), key=key)


# -- simple types -----------------------------------------------------------------------

class _TV:
    __slots__ = ("ref",)

    def __init__(self):
        self.ref = None


def _prune(t):
    while isinstance(t, _TV) and t.ref is not None:
        t = t.ref
    return t


def _unify(a, b):
    a, b = _prune(a), _prune(b)
    if a is b:
        return
    if isinstance(a, _TV):
        if _occurs(a, b):
            raise OracleError("infinite type")
        a.ref = b
        return
    if isinstance(b, _TV):
        _unify(b, a)
        return
    if a == "bool" and b == "bool":
        return
    if isinstance(a, tuple) and isinstance(b, tuple) and a[0] == b[0]:
        _unify(a[1], b[1])
        _unify(a[2], b[2])
        return
    raise OracleError(f"type mismatch: {_show(a)} vs {_show(b)}")


def _occurs(v, t):
    t = _prune(t)
    if t is v:
        return True
    return isinstance(t, tuple) and (_occurs(v, t[1]) or _occurs(v, t[2]))


def _show(t):
    t = _prune(t)
    if isinstance(t, _TV):
        return "'a"
    if t == "bool":
        return "bool"
    op = " -> " if t[0] == "fn" else " * "
    return f"({_show(t[1])}{op}{_show(t[2])})"


def typecheck_bool(term: S.Term, inputs=()) -> str:
    """Simple-type the term with each input at ``bool``; returns the type as text."""
    env = {x: "bool" for x in inputs}
    return _show(_infer(term, env))


def _infer(t, env):
    if isinstance(t, S.Var):
        if t.name not in env:
            raise OracleError(f"unbound variable {t.name!r}")
        return env[t.name]
    if isinstance(t, S.Bool):
        return "bool"
    if isinstance(t, S.Const):
        if t.name == "not":
            return ("fn", "bool", "bool")
        if t.name == "and":
            return ("fn", "bool", ("fn", "bool", "bool"))
        raise OracleError(f"{t.name!r} is not a boolean primitive")
    if isinstance(t, S.Lam):
        a = _TV()
        return ("fn", a, _infer(t.body, {**env, t.var: a}))
    if isinstance(t, S.App):
        f = _infer(t.fn, env)
        a = _infer(t.arg, env)
        r = _TV()
        _unify(f, ("fn", a, r))
        return r
    if isinstance(t, S.Pair):
        return ("pair", _infer(t.left, env), _infer(t.right, env))
    if isinstance(t, S.LetPair):
        a, b = _TV(), _TV()
        _unify(_infer(t.bound, env), ("pair", a, b))
        return _infer(t.body, {**env, t.x: a, t.y: b})
    if isinstance(t, S.If):
        _unify(_infer(t.cond, env), "bool")
        m = _infer(t.then, env)
        _unify(m, _infer(t.else_, env))
        return m
    if isinstance(t, S.LetRec):
        a, b = _TV(), _TV()
        f = ("fn", a, b)
        _unify(_infer(t.fbody, {**env, t.f: f, t.x: a}), b)
        return _infer(t.body, {**env, t.f: f})
    raise OracleError(f"unsupported construct {type(t).__name__}")


# -- partial evaluator -------------------------------------------------------------------

@dataclass(eq=False)
class WireV:
    wire: int
    fresh: bool = False  # produced by an operator and not yet bound anywhere


@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class PairV:
    left: object
    right: object


@dataclass(frozen=True, eq=False)
class Closure:
    var: str
    body: S.Term
    env: dict


@dataclass(frozen=True, eq=False)
class RecClosure:
    f: str
    var: str
    body: S.Term
    env: dict


@dataclass(frozen=True)
class PrimV:
    name: str
    args: tuple = ()


def _share(v):
    if isinstance(v, WireV) and v.fresh:
        return WireV(v.wire, False)
    if isinstance(v, PairV):
        return PairV(_share(v.left), _share(v.right))
    return v


class _Builder:
    """Append-only reversible circuit under construction."""

    def __init__(self, n_inputs: int, fuel: int):
        self.ops: list = []
        self.inputs = list(range(n_inputs))
        self._wires = itertools.count(n_inputs)
        self.fuel = fuel
        self.op_count = 0

    def tick(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise StaticRecursionError("recursion does not unroll at compile time (fuel exhausted)")

    def ancilla(self) -> int:
        w = next(self._wires)
        self.ops.append(Init(w, 0))
        return w

    def const(self, b: bool) -> WireV:
        w = self.ancilla()
        if b:
            self.ops.append(Gate("X", targets=(w,)))
        self.op_count += 1
        return WireV(w, True)

    def not_(self, v: WireV) -> WireV:
        self.op_count += 1
        if v.fresh:
            self.ops.append(Gate("X", targets=(v.wire,)))
            return WireV(v.wire, True)
        w = self.ancilla()
        self.ops.append(Gate("X", controls=((v.wire, True),), targets=(w,)))
        self.ops.append(Gate("X", targets=(w,)))
        return WireV(w, True)

    def and_(self, a: WireV, b: WireV) -> WireV:
        self.op_count += 1
        z = self.ancilla()
        if a.wire == b.wire:
            self.ops.append(Gate("X", controls=((a.wire, True),), targets=(z,)))
        else:
            self.ops.append(Gate("X", controls=((a.wire, True), (b.wire, True)), targets=(z,)))
        return WireV(z, True)

    def mux(self, c: WireV, a, b):
        """``if c then a else b`` on wire data; values have the same shape."""
        if isinstance(a, PairV):
            return PairV(self.mux(c, a.left, b.left), self.mux(c, a.right, b.right))
        if isinstance(a, BoolV) and isinstance(b, BoolV) and a.value == b.value:
            return a
        if not isinstance(a, (BoolV, WireV)) or not isinstance(b, (BoolV, WireV)):
            raise OracleError("a branch on wire data must produce boolean data, not functions")
        a = self.const(a.value) if isinstance(a, BoolV) else a
        b = self.const(b.value) if isinstance(b, BoolV) else b
        self.op_count += 1
        z = self.ancilla()
        for src, pos in ((a, True), (b, False)):
            if src.wire == c.wire:
                # c ? c : _ is c on that branch; a single positive control suffices
                if pos:
                    self.ops.append(Gate("X", controls=((c.wire, True),), targets=(z,)))
                continue
            self.ops.append(Gate("X", controls=((c.wire, pos), (src.wire, True)), targets=(z,)))
        return WireV(z, True)


def _apply(f, v, b: _Builder):
    b.tick()
    if isinstance(f, Closure):
        return _eval(f.body, {**f.env, f.var: _share(v)}, b)
    if isinstance(f, RecClosure):
        env = {**f.env, f.f: f, f.var: _share(v)}
        return _eval(f.body, env, b)
    if isinstance(f, PrimV):
        if f.name == "not":
            if isinstance(v, BoolV):
                return BoolV(not v.value)
            if isinstance(v, WireV):
                return b.not_(v)
            raise OracleError("not expects a boolean")
        if f.name == "and":
            if not f.args:
                if not isinstance(v, (BoolV, WireV)):
                    raise OracleError("and expects booleans")
                return PrimV("and", (v,))
            a = f.args[0]
            if not isinstance(v, (BoolV, WireV)):
                raise OracleError("and expects booleans")
            if isinstance(a, BoolV) and isinstance(v, BoolV):
                return BoolV(a.value and v.value)
            if isinstance(a, BoolV):
                return v if a.value else BoolV(False)
            if isinstance(v, BoolV):
                return a if v.value else BoolV(False)
            return b.and_(a, v)
    raise OracleError(f"cannot apply {type(f).__name__}")


def _eval(t, env, b: _Builder):
    b.tick()
    if isinstance(t, S.Var):
        if t.name not in env:
            raise OracleError(f"unbound variable {t.name!r}")
        return env[t.name]
    if isinstance(t, S.Bool):
        return BoolV(t.value)
    if isinstance(t, S.Const):
        if t.name in PRIMS:
            return PrimV(t.name)
        raise OracleError(f"{t.name!r} is not a boolean primitive")
    if isinstance(t, S.Lam):
        return Closure(t.var, t.body, env)
    if isinstance(t, S.App):
        # call-by-value: argument first, as in the qlc machine
        v = _eval(t.arg, env, b)
        f = _eval(t.fn, env, b)
        return _apply(f, v, b)
    if isinstance(t, S.Pair):
        return PairV(_eval(t.left, env, b), _eval(t.right, env, b))
    if isinstance(t, S.LetPair):
        p = _eval(t.bound, env, b)
        if not isinstance(p, PairV):
            raise OracleError("let-pair of a non-pair")
        return _eval(t.body, {**env, t.x: _share(p.left), t.y: _share(p.right)}, b)
    if isinstance(t, S.If):
        c = _eval(t.cond, env, b)
        if isinstance(c, BoolV):
            return _eval(t.then if c.value else t.else_, env, b)
        if not isinstance(c, WireV):
            raise OracleError("if expects a boolean")
        c = _share(c)
        then = _eval(t.then, env, b)
        else_ = _eval(t.else_, env, b)
        return b.mux(c, then, else_)
    if isinstance(t, S.LetRec):
        rec = RecClosure(t.f, t.x, t.fbody, env)
        return _eval(t.body, {**env, t.f: rec}, b)
    raise OracleError(f"unsupported construct {type(t).__name__}")


# -- public API --------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionValue:
    """A function-typed result of :func:`eval_bool`."""

    closure: object

    def __call__(self, *args):
        v = self.closure
        for a in args:
            v = _apply(v, _to_value(a), _Builder(0, 100_000))
        return _from_value(v)


def _to_value(a):
    if isinstance(a, tuple):
        return PairV(_to_value(a[0]), _to_value(a[1]))
    return BoolV(bool(a))


def _from_value(v):
    if isinstance(v, BoolV):
        return v.value
    if isinstance(v, PairV):
        return (_from_value(v.left), _from_value(v.right))
    if isinstance(v, (Closure, RecClosure, PrimV)):
        return FunctionValue(v)
    raise OracleError("unexpected wire value in a closed evaluation")


def eval_bool(term: S.Term, env: Optional[dict] = None, fuel: int = 100_000):
    """Evaluate a closed term; returns a bool, a (nested) tuple, or a :class:`FunctionValue`."""
    values = {k: _to_value(v) for k, v in (env or {}).items()}
    b = _Builder(0, fuel)
    return _from_value(_eval(term, values, b))


def truth_table(term: S.Term, inputs=None, fuel: int = 100_000):
    """``f(bits) -> tuple of output bits`` for a term with boolean free variables."""
    names = list(inputs) if inputs is not None else input_names(term)

    def f(bits):
        v = eval_bool(term, dict(zip(names, bits)), fuel)
        return tuple(int(x) for x in _leaves(v))

    return f


def _leaves(v):
    if isinstance(v, tuple):
        return _leaves(v[0]) + _leaves(v[1])
    if isinstance(v, bool):
        return [v]
    raise OracleError("the function result is not boolean data")


@dataclass(frozen=True)
class Landauer:
    """Garbage-producing embedding ``(x, 0) -> (x, garbage, f(x))``."""

    circuit: Circuit
    inputs: tuple
    outputs: tuple  # wire per output bit (may repeat or be an input wire)
    garbage: tuple
    op_count: int  # boolean operators in the residual formula

    @property
    def ancillas(self) -> tuple:
        return tuple(op.wire for op in self.circuit.ops if isinstance(op, Init))


def synth_landauer(term: S.Term, inputs=None, fuel: int = 100_000) -> Landauer:
    """Partially evaluate ``term`` over input wires into a reversible circuit.

    ``inputs`` orders the free variables (default: natural sort). Wire ``i``
    carries input ``i``; ancillas are allocated after the inputs.
    """
    names = list(inputs) if inputs is not None else input_names(term)
    extra = S.free_vars(term) - set(names)
    if extra:
        raise OracleError(f"free variables without an input wire: {sorted(extra)}")
    try:
        typecheck_bool(term, names)
    except RecursionError:
        raise OracleError("term too deep") from None
    b = _Builder(len(names), fuel)
    env = {x: WireV(i) for i, x in enumerate(names)}
    try:
        v = _eval(term, env, b)
    except RecursionError:
        raise StaticRecursionError("recursion does not unroll at compile time") from None
    outs = []
    for leaf in _value_leaves(v):
        if isinstance(leaf, BoolV):
            leaf = b.const(leaf.value)
        outs.append(leaf.wire)
    live = list(range(len(names))) + [op.wire for op in b.ops if isinstance(op, Init)]
    c = Circuit(tuple((w, circ_mod.QBIT) for w in range(len(names))), tuple(b.ops),
                tuple((w, circ_mod.QBIT) for w in live))
    garbage = tuple(w for w in live[len(names):] if w not in outs)
    return Landauer(c, tuple(range(len(names))), tuple(outs), garbage, b.op_count)


def _value_leaves(v):
    if isinstance(v, PairV):
        return _value_leaves(v.left) + _value_leaves(v.right)
    if isinstance(v, (BoolV, WireV)):
        return [v]
    raise OracleError("the term must produce boolean data, not a function")


def bennett_wrap(landauer: Landauer | Circuit, outputs=None, n_in: Optional[int] = None,
                 m_out: Optional[int] = None) -> Circuit:
    """Clean oracle ``(x, y) -> (x, y xor f(x))`` with all ancillas restored.

    Accepts a :class:`Landauer` or a bare measurement-free circuit whose
    first ``n_in`` inputs are the data wires and whose ``Init`` ops allocate
    the ancillas.
    """
    if isinstance(landauer, Landauer):
        c = landauer.circuit
        outputs = landauer.outputs if outputs is None else outputs
        n_in = len(landauer.inputs) if n_in is None else n_in
    else:
        c = landauer
        if outputs is None or n_in is None:
            raise OracleError("outputs and n_in are required for a bare circuit")
    m_out = len(outputs) if m_out is None else m_out
    if m_out != len(outputs):
        raise OracleError(f"{len(outputs)} output wires for a {m_out}-bit target register")
    if not c.is_pure() and any(not isinstance(op, (Init, Gate)) for op in c.ops):
        raise OracleError("the embedding must be measurement-free")
    inits = [op for op in c.ops if isinstance(op, Init)]
    gates = [op for op in c.ops if isinstance(op, Gate)]
    anc = [op.wire for op in inits]
    xs = [w for w, _ in c.inputs][:n_in]
    # the core is the pure part with ancillas as extra inputs
    core_wires = tuple((w, circ_mod.QBIT) for w in [w for w, _ in c.inputs] + anc)
    core = Circuit(core_wires, tuple(gates), core_wires)
    try:
        undo = circ_mod.inverse(core)
    except circ_mod.InversionError as e:  # cannot happen for gate-only circuits
        raise OracleError(f"internal error: {e}") from None
    top = max([w for w, _ in core_wires] + [-1]) + 1
    ys = list(range(top, top + m_out))
    ops = [Init(w, 0) for w in anc] + gates
    ops += [Gate("X", controls=((o, True),), targets=(y,)) for o, y in zip(outputs, ys)]
    ops += list(undo.ops) + [Discard(w) for w in anc]
    iface = tuple((w, circ_mod.QBIT) for w in xs + ys)
    extra_in = [w for w, _ in c.inputs][n_in:]
    if extra_in:
        raise OracleError("the embedding has inputs beyond the data register")
    return Circuit(iface, tuple(ops), iface)


# -- classical verification -------------------------------------------------------------------

@dataclass
class VerifyResult:
    ok: bool
    counterexample: Optional[dict] = None
    checked: int = 0

    def __bool__(self):
        return self.ok


class NotClassicalError(OracleError):
    pass


def simulate_classical(c: Circuit, bits: dict) -> tuple[dict, list]:
    """Run a permutation circuit on basis input ``bits`` (wire -> 0/1).

    Returns the final wire values and the list of ``(wire, value)`` at each
    discard.
    """
    val = dict(bits)
    discards = []
    for op in c.ops:
        if isinstance(op, Init):
            val[op.wire] = op.value
        elif isinstance(op, Discard):
            discards.append((op.wire, val.pop(op.wire)))
        elif isinstance(op, Gate):
            if op.dagger and op.name not in ("X", "NOT", "CNOT", "TOFFOLI", "SWAP"):
                raise NotClassicalError(f"gate {op.name} is not classical")
            if not all(val[w] == int(p) for w, p in op.controls):
                continue
            t = op.targets
            if op.name in ("X", "NOT"):
                val[t[0]] ^= 1
            elif op.name == "CNOT":
                val[t[1]] ^= val[t[0]]
            elif op.name == "TOFFOLI":
                val[t[2]] ^= val[t[0]] & val[t[1]]
            elif op.name == "SWAP":
                val[t[0]], val[t[1]] = val[t[1]], val[t[0]]
            elif op.name == "I":
                pass
            else:
                raise NotClassicalError(f"gate {op.name} is not classical")
        else:
            raise NotClassicalError("measurement in an oracle circuit")
    return val, discards


def verify_oracle(circuit: Circuit, spec: S.Term | str, n: int, inputs=None) -> VerifyResult:
    """Check ``(x, y) -> (x, y xor f(x))`` on every basis input, bitwise.

    The circuit interface is the first ``n`` wires for ``x`` followed by the
    target register; every discarded ancilla must be back to 0.
    """
    if isinstance(spec, str):
        spec = parse_bool(spec)
    if n > 12:
        raise OracleError("brute-force verification is limited to 12 input bits")
    names = list(inputs) if inputs is not None else input_names(spec)
    if len(names) != n:
        raise OracleError(f"spec has {len(names)} inputs, expected {n}")
    f = truth_table(spec, names)
    wires = [w for w, _ in circuit.inputs]
    if [w for w, _ in circuit.outputs] != wires:
        raise OracleError("oracle must keep its wires in place")
    xw, yw = wires[:n], wires[n:]
    checked = 0
    for xbits in itertools.product((0, 1), repeat=n):
        fx = f(xbits)
        if len(fx) != len(yw):
            raise OracleError(f"f has {len(fx)} output bits but the target register has {len(yw)}")
        for ybits in itertools.product((0, 1), repeat=len(yw)):
            checked += 1
            inp = dict(zip(xw, xbits)) | dict(zip(yw, ybits))
            out, discards = simulate_classical(circuit, inp)
            expect = list(xbits) + [a ^ b for a, b in zip(ybits, fx)]
            got = [out[w] for w in wires]
            dirty = [w for w, v in discards if v != 0]
            if got != expect or dirty:
                return VerifyResult(False, {
                    "x": list(xbits), "y": list(ybits), "expected": expect, "got": got,
                    "dirty_ancillas": dirty,
                }, checked)
    return VerifyResult(True, None, checked)


def is_permutation(c: Circuit) -> bool:
    """Brute-force bijectivity of a gate-only circuit on its input wires."""
    if not c.is_pure():
        raise OracleError("bijectivity is checked on gate-only circuits")
    wires = [w for w, _ in c.inputs]
    if len(wires) > 12:
        raise OracleError("brute force is limited to 12 wires")
    seen = set()
    for bits in itertools.product((0, 1), repeat=len(wires)):
        out, _ = simulate_classical(c, dict(zip(wires, bits)))
        seen.add(tuple(out[w] for w, _ in c.outputs))
    return len(seen) == 2 ** len(wires)


def compile_oracle(term: S.Term | str, inputs=None) -> tuple[Circuit, Landauer]:
    if isinstance(term, str):
        term = parse_bool(term)
    lan = synth_landauer(term, inputs)
    return bennett_wrap(lan), lan

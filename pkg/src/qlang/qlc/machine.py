"""Probabilistic QRAM machine ``[Q, L, M]`` with box/unbox.

Reduction is call-by-value: in an application the argument is reduced
first, then the function; pairs reduce left to right. Quantum effects go
through a *store*: :class:`RealStore` holds an actual state vector, while
:class:`SymStore` records circuit operations while a function is boxed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .. import circuit as circ_mod
from .. import qnum
from ..circuit import Circuit, Discard, Gate, Init, Measure
from ..qnum import StateVector
from .syntax import (
    App, Bool, CircLit, Const, GATE_ARITY, If, Lam, LetPair, LetRec, LetUnit, Pair, Term, Unboxed,
    Unit, UNIT, Var, free_vars, gate_matrix, size, tuple_term,
)
from .types import BitT, QBit, QType, Tensor, UnitT, flatten_tensor


class MachineError(RuntimeError):
    """Internal error: a well-typed program got stuck."""


class FuelExhausted(RuntimeError):
    pass


class BoxError(ValueError):
    pass


QVAR_PREFIX = "#"


@dataclass(frozen=True)
class Program:
    """Machine state: quantum register, qubit-variable layout and term.

    ``L`` lists qubit variable names; ``L[i]`` lives on wire ``i`` of ``Q``.
    """

    Q: StateVector
    L: tuple
    M: Term

    def __post_init__(self):
        if len(self.L) != self.Q.n_qubits:
            raise ValueError(f"layout has {len(self.L)} variables for {self.Q.n_qubits} qubits")

    @classmethod
    def initial(cls, term: Term) -> "Program":
        return cls(StateVector.empty(), (), term)

    @property
    def layout(self) -> dict:
        return {x: i for i, x in enumerate(self.L)}

    def is_value(self) -> bool:
        return self.M.is_value


class TraceStep(NamedTuple):
    rule: str
    prob: float
    size: int
    mass: float = 1.0  # total probability over all branches of this step


# -- substitution --------------------------------------------------------------------

_fresh_names = itertools.count()


def _rename_away(name, avoid):
    while True:
        cand = f"{name}'{next(_fresh_names)}"
        if cand not in avoid:
            return cand


def subst(t: Term, sub: dict) -> Term:
    """Capture-avoiding simultaneous substitution of closed-ish values."""
    if not sub:
        return t
    fv = set()
    for v in sub.values():
        fv |= free_vars(v)
    return _subst(t, sub, fv)


def _bind(var, body_sub, fv):
    """Drop ``var`` from the substitution; rename it if it would capture."""
    sub = {k: v for k, v in body_sub.items() if k != var}
    if var in fv and sub:
        new = _rename_away(var, fv)
        sub = dict(sub)
        sub[var] = Var(new)
        return new, sub
    return var, sub


def _subst(t, sub, fv):
    if isinstance(t, Var):
        return sub.get(t.name, t)
    if isinstance(t, (Bool, Unit, Const, CircLit, Unboxed)):
        return t
    if isinstance(t, Lam):
        var, s2 = _bind(t.var, sub, fv)
        if not s2:
            return t
        return Lam(var, _subst(t.body, s2, fv | {var}))
    if isinstance(t, App):
        return App(_subst(t.fn, sub, fv), _subst(t.arg, sub, fv))
    if isinstance(t, Pair):
        return Pair(_subst(t.left, sub, fv), _subst(t.right, sub, fv))
    if isinstance(t, LetPair):
        bound = _subst(t.bound, sub, fv)
        x, s2 = _bind(t.x, sub, fv)
        y, s2 = _bind(t.y, s2, fv)
        body = _subst(t.body, s2, fv | {x, y}) if s2 else t.body
        return LetPair(x, y, bound, body)
    if isinstance(t, LetUnit):
        return LetUnit(_subst(t.bound, sub, fv), _subst(t.body, sub, fv))
    if isinstance(t, If):
        return If(_subst(t.cond, sub, fv), _subst(t.then, sub, fv), _subst(t.else_, sub, fv))
    if isinstance(t, LetRec):
        f, x = t.f, t.x
        s_body = {k: v for k, v in sub.items() if k != f}
        s_fb = {k: v for k, v in s_body.items() if k != x}
        if f in fv and s_body:
            f = _rename_away(f, fv)
            s_body[t.f] = s_fb[t.f] = Var(f)
        if x in fv and s_fb:
            x = _rename_away(x, fv)
            s_fb[t.x] = Var(x)
        fbody = _subst(t.fbody, s_fb, fv | {f, x}) if s_fb else t.fbody
        body = _subst(t.body, s_body, fv | {f}) if s_body else t.body
        return LetRec(f, x, fbody, body)
    raise TypeError(t)


# -- stores ---------------------------------------------------------------------------

class RealStore:
    def __init__(self, Q: StateVector, L: tuple, rng, max_qubits=None):
        self.amps = Q.amps
        self.L = list(L)
        self.rng = rng
        self.max_qubits = max_qubits
        self._counter = _next_index(L)

    def fresh(self):
        name = f"{QVAR_PREFIX}{self._counter}"
        self._counter += 1
        return name

    def new_qubit(self, bit: int) -> str:
        qnum.check_width(len(self.L) + 1, self.max_qubits)
        ket = np.zeros(2, dtype=complex)
        ket[bit] = 1
        self.amps = np.kron(self.amps, ket)
        name = self.fresh()
        self.L.append(name)
        return name

    def apply(self, u: np.ndarray, names):
        idx = [self.L.index(x) for x in names]
        self.amps = qnum.apply_array(self.amps, u, idx, len(self.L))

    def measure(self, name):
        """Returns ``(bit, prob, mass)``; the qubit is removed."""
        st = StateVector(self.amps)
        wire = self.L.index(name)
        p0, p1 = qnum.outcome_probabilities(st, wire)
        bit, post, prob = qnum.measure(st, wire, self.rng, remove=True)
        self.amps = post.amps
        del self.L[wire]
        return bit, prob, p0 + p1

    def discard(self, name):
        st = StateVector(self.amps)
        wire = self.L.index(name)
        p0, p1 = qnum.outcome_probabilities(st, wire)
        if min(p0, p1) > qnum.NORM_TOL:
            raise MachineError(f"unsafe discard of {name}: not in a basis state")
        self.amps = qnum.project(st, wire, 0 if p0 >= p1 else 1, remove=True).amps
        del self.L[wire]

    def program(self, M):
        return Program(StateVector(self.amps), tuple(self.L), M)


def _next_index(L):
    best = 0
    for x in L:
        if x.startswith(QVAR_PREFIX) and x[1:].isdigit():
            best = max(best, int(x[1:]) + 1)
    return best


class SymStore:
    """Records operations on symbolic wires; qubit variables name wires."""

    def __init__(self, first_wire=0):
        self.ops: list = []
        self.wire_of: dict = {}
        self._wires = itertools.count(first_wire)

    def input(self) -> str:
        w = next(self._wires)
        name = f"{QVAR_PREFIX}w{w}"
        self.wire_of[name] = w
        return name

    def new_qubit(self, bit: int) -> str:
        name = self.input()
        self.ops.append(Init(self.wire_of[name], int(bit)))
        return name

    def new_wire(self) -> int:
        return next(self._wires)

    def apply_gate(self, name, params, names, controls=()):
        self.ops.append(
            Gate(name, tuple(params), tuple(controls), tuple(self.wire_of[x] for x in names))
        )

    def measure(self, name):
        raise BoxError("dynamic lifting unsupported: meas inside a boxed function")

    def discard(self, name):
        self.ops.append(Discard(self.wire_of.pop(name)))


# -- one step ---------------------------------------------------------------------------

class _Stuck(Exception):
    pass


def _flatten_value(v: Term) -> list:
    if isinstance(v, Unit):
        return []
    out = []
    while isinstance(v, Pair):
        out.append(v.left)
        v = v.right
    out.append(v)
    return out


def _qubit_args(v: Term, n: int) -> list:
    items = _flatten_value(v) if n != 1 else [v]
    if len(items) != n or not all(isinstance(x, Var) for x in items):
        raise _Stuck(f"gate expects {n} qubit(s), got {v!r}")
    return [x.name for x in items]


def _apply_const(c: Const, v: Term, store):
    """Fire ``c v``; returns ``(term, rule, prob, mass)``."""
    name = c.name
    if name == "qinit":
        if not isinstance(v, Bool):
            raise _Stuck("qinit expects a bit")
        return Var(store.new_qubit(int(v.value))), "qinit", 1.0, 1.0
    if name == "meas":
        if not isinstance(v, Var):
            raise _Stuck("meas expects a qubit")
        bit, prob, mass = store.measure(v.name)
        return Bool(bool(bit)), "meas", prob, mass
    if name in GATE_ARITY:
        n = GATE_ARITY[name]
        names = _qubit_args(v, n)
        if isinstance(store, SymStore):
            store.apply_gate("X" if name == "NOT" else name, c.params, names)
        else:
            store.apply(gate_matrix(c), names)
        return v, "gate", 1.0, 1.0
    if name == "box":
        if not v.is_value:
            raise _Stuck("box expects a value")
        return CircLit(box_value(v, c.box_shape)), "box", 1.0, 1.0
    if name == "unbox":
        if not isinstance(v, CircLit):
            raise _Stuck("unbox expects a circuit")
        return Unboxed(v.circuit), "unbox", 1.0, 1.0
    raise _Stuck(f"unknown constant {name}")


def replay(c: Circuit, v: Term, store):
    """Run circuit ``c`` on argument value ``v``; returns ``(term, prob, mass)``."""
    args = _flatten_value(v) if len(c.inputs) != 1 else [v]
    if len(args) != len(c.inputs):
        raise _Stuck(f"circuit expects {len(c.inputs)} input(s), got {len(args)}")
    env: dict = {}
    bits: dict = {}
    for (w, kind), a in zip(c.inputs, args):
        if kind == circ_mod.QBIT:
            if not isinstance(a, Var):
                raise _Stuck("circuit input mismatch: expected a qubit")
            env[w] = a.name
        else:
            if not isinstance(a, Bool):
                raise _Stuck("circuit input mismatch: expected a bit")
            bits[w] = int(a.value)
    prob, mass = 1.0, 1.0
    for op in c.ops:
        if isinstance(op, Init):
            env[op.wire] = store.new_qubit(op.value)
        elif isinstance(op, Gate):
            if any(w in bits and bits[w] != int(pos) for w, pos in op.controls):
                continue
            qctl = [(w, pos) for w, pos in op.controls if w not in bits]
            if isinstance(store, SymStore):
                store.ops.append(
                    Gate(op.name, op.params, tuple((store.wire_of[env[w]], p) for w, p in qctl),
                         tuple(store.wire_of[env[w]] for w in op.targets), op.dagger)
                )
            else:
                u = circ_mod._full_gate(Gate(op.name, op.params, tuple(qctl), op.targets, op.dagger))
                store.apply(u, [env[w] for w, _ in qctl] + [env[w] for w in op.targets])
        elif isinstance(op, Measure):
            bit, p, m = store.measure(env.pop(op.qwire))
            prob *= p
            mass *= m
            bits[op.bwire] = bit
        elif isinstance(op, Discard):
            if op.wire in bits:
                del bits[op.wire]
            else:
                store.discard(env.pop(op.wire))
    outs = []
    for w, kind in c.outputs:
        outs.append(Var(env[w]) if kind == circ_mod.QBIT else Bool(bool(bits[w])))
    return tuple_term(outs), prob, mass


def _reduce(t: Term, store):
    """Reduce the unique redex of ``t``; returns ``(term, rule, prob, mass)``."""
    if isinstance(t, App):
        if not t.arg.is_value:
            a, r, p, m = _reduce(t.arg, store)
            return App(t.fn, a), r, p, m
        if not t.fn.is_value:
            f, r, p, m = _reduce(t.fn, store)
            return App(f, t.arg), r, p, m
        f = t.fn
        if isinstance(f, Lam):
            return subst(f.body, {f.var: t.arg}), "beta", 1.0, 1.0
        if isinstance(f, Const):
            return _apply_const(f, t.arg, store)
        if isinstance(f, Unboxed):
            out, p, m = replay(f.circuit, t.arg, store)
            return out, "circuit", p, m
        raise _Stuck(f"cannot apply {f!r}")
    if isinstance(t, Pair):
        if not t.left.is_value:
            a, r, p, m = _reduce(t.left, store)
            return Pair(a, t.right), r, p, m
        if not t.right.is_value:
            b, r, p, m = _reduce(t.right, store)
            return Pair(t.left, b), r, p, m
        raise _Stuck("pair of values is not a redex")
    if isinstance(t, LetPair):
        if not t.bound.is_value:
            a, r, p, m = _reduce(t.bound, store)
            return LetPair(t.x, t.y, a, t.body), r, p, m
        if not isinstance(t.bound, Pair):
            raise _Stuck("let-pair of a non-pair")
        return subst(t.body, {t.x: t.bound.left, t.y: t.bound.right}), "let-pair", 1.0, 1.0
    if isinstance(t, LetUnit):
        if not t.bound.is_value:
            a, r, p, m = _reduce(t.bound, store)
            return LetUnit(a, t.body), r, p, m
        if not isinstance(t.bound, Unit):
            raise _Stuck("let-unit of a non-unit")
        return t.body, "let-unit", 1.0, 1.0
    if isinstance(t, If):
        if not t.cond.is_value:
            a, r, p, m = _reduce(t.cond, store)
            return If(a, t.then, t.else_), r, p, m
        if not isinstance(t.cond, Bool):
            raise _Stuck("if on a non-bit")
        return (t.then if t.cond.value else t.else_), "if", 1.0, 1.0
    if isinstance(t, LetRec):
        unfold = Lam(t.x, LetRec(t.f, t.x, t.fbody, t.fbody))
        return subst(t.body, {t.f: unfold}), "letrec", 1.0, 1.0
    raise _Stuck(f"no redex in {type(t).__name__}")


def step_traced(p: Program, rng, max_qubits=None) -> tuple:
    """One reduction; returns ``(program, TraceStep)``."""
    if p.M.is_value:
        raise MachineError("value programs do not step")
    store = RealStore(p.Q, p.L, rng, max_qubits)
    try:
        m, rule, prob, mass = _reduce(p.M, store)
    except _Stuck as e:
        raise MachineError(f"stuck program (progress violated): {e}") from None
    return store.program(m), TraceStep(rule, prob, size(m), mass)


def step(p: Program, rng, max_qubits=None) -> tuple:
    """One reduction; returns ``(program, probability)``."""
    q, ts = step_traced(p, rng, max_qubits)
    return q, ts.prob


@dataclass
class EvalResult:
    program: Program
    trace: list = field(default_factory=list)

    @property
    def prob(self) -> float:
        out = 1.0
        for s in self.trace:
            out *= s.prob
        return out

    @property
    def value(self) -> Term:
        return self.program.M


def eval_program(p: Program, rng, fuel: int = 100_000, max_qubits=None, on_step=None) -> EvalResult:
    """Step until a value; raises :class:`FuelExhausted` past ``fuel`` steps."""
    trace = []
    while not p.M.is_value:
        if len(trace) >= fuel:
            raise FuelExhausted(f"no value after {fuel} steps")
        p, ts = step_traced(p, rng, max_qubits)
        trace.append(ts)
        if on_step is not None:
            on_step(p, ts)
    return EvalResult(p, trace)


def run_term(term: Term, rng, fuel: int = 100_000, max_qubits=None) -> EvalResult:
    return eval_program(Program.initial(term), rng, fuel, max_qubits)


# -- box / unbox ------------------------------------------------------------------------

def box_value(fn: Term, shape=None, fuel: int = 100_000) -> Circuit:
    """Symbolically run function value ``fn`` on fresh wires and record a circuit.

    ``shape`` is ``(input type, output type)``; without it the input is a
    single qubit.
    """
    in_t, out_t = shape if shape is not None else (QBit(), None)
    in_parts = flatten_tensor(in_t)
    if any(not isinstance(x, QBit) for x in in_parts):
        raise BoxError(f"boxed functions take qubits only, not {in_t}")
    store = SymStore()
    names = [store.input() for _ in in_parts]
    inputs = tuple((store.wire_of[x], circ_mod.QBIT) for x in names)
    term: Term = App(fn, tuple_term([Var(x) for x in names]))
    for _ in range(fuel):
        if term.is_value:
            break
        try:
            term, *_ = _reduce(term, store)
        except _Stuck as e:
            raise BoxError(f"cannot box: {e}") from None
    else:
        raise FuelExhausted(f"boxed function did not finish in {fuel} steps")
    out_items = _flatten_value(term) if not (out_t is not None and len(flatten_tensor(out_t)) == 1) else [term]
    outputs = []
    live = set(store.wire_of)
    for item in out_items:
        if isinstance(item, Var) and item.name in live:
            outputs.append((store.wire_of[item.name], circ_mod.QBIT))
            live.discard(item.name)
        elif isinstance(item, Bool):
            # constant bit output: prepare and measure a basis qubit
            w, b = store.new_wire(), store.new_wire()
            store.ops.append(Init(w, int(item.value)))
            store.ops.append(Measure(w, b))
            outputs.append((b, circ_mod.BIT))
        else:
            raise BoxError(f"non-qubit-shaped output {item!r}")
    if live:
        raise BoxError(f"boxed function leaves unused qubits {sorted(live)}")
    return Circuit(inputs, tuple(store.ops), tuple(outputs))


def unbox_circuit(c: Circuit) -> Term:
    """The duplicable function replaying ``c``."""
    return Unboxed(c)


def circuit_interface_type(c: Circuit) -> tuple:
    def nest(kinds):
        items = [QBit() if k == circ_mod.QBIT else BitT() for _, k in kinds]
        if not items:
            return UnitT()
        out = items[-1]
        for t in reversed(items[:-1]):
            out = Tensor(t, out)
        return out

    return nest(c.inputs), nest(c.outputs)

"""Circuit intermediate representation, combinators and simulation.

Wires carry stable integer ids. Combinators never splice positionally:
they rename the second operand's wires through a fresh-id supply.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import qnum
from .qnum import StateVector

QBIT, BIT = "qbit", "bit"

# gates equal to their own inverse
SELF_INVERSE = frozenset({"I", "H", "X", "NOT", "Z", "CNOT", "SWAP", "TOFFOLI"})
ANGLE_GATES = frozenset({"RX", "RY", "RZ", "MS"})
DAGGER_NAMES = {"S": "SDG", "T": "TDG"}
_FROM_DAGGER_NAME = {v: k for k, v in DAGGER_NAMES.items()}


class CircuitError(ValueError):
    pass


class InversionError(CircuitError):
    pass


@dataclass(frozen=True)
class Init:
    wire: int
    value: int


@dataclass(frozen=True)
class Gate:
    name: str
    params: tuple = ()
    controls: tuple = ()  # of (wire, positive: bool)
    targets: tuple = ()
    dagger: bool = False

    def wires(self) -> tuple:
        return tuple(w for w, _ in self.controls) + tuple(self.targets)


@dataclass(frozen=True)
class Measure:
    qwire: int
    bwire: int


@dataclass(frozen=True)
class Discard:
    wire: int


CircOp = Union[Init, Gate, Measure, Discard]


def gate(name: str, *targets: int, params=(), controls=(), dagger=False) -> Gate:
    """Convenience constructor; controls given as wires (positive) or (wire, bool)."""
    ctl = []
    for c in controls:
        ctl.append((int(c[0]), bool(c[1])) if isinstance(c, tuple) else (int(c), True))
    return Gate(name, tuple(float(p) for p in params), tuple(ctl), tuple(targets), dagger)


def op_wires(op: CircOp) -> tuple:
    if isinstance(op, Gate):
        return op.wires()
    if isinstance(op, Init):
        return (op.wire,)
    if isinstance(op, Measure):
        return (op.qwire, op.bwire)
    return (op.wire,)


def _rename_op(op: CircOp, ren: dict) -> CircOp:
    if isinstance(op, Gate):
        return Gate(
            op.name,
            op.params,
            tuple((ren[w], p) for w, p in op.controls),
            tuple(ren[w] for w in op.targets),
            op.dagger,
        )
    if isinstance(op, Init):
        return Init(ren[op.wire], op.value)
    if isinstance(op, Measure):
        return Measure(ren[op.qwire], ren[op.bwire])
    return Discard(ren[op.wire])


@dataclass(frozen=True)
class Circuit:
    inputs: tuple = ()  # of (wire id, kind)
    ops: tuple = ()
    outputs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple((int(w), k) for w, k in self.inputs))
        object.__setattr__(self, "outputs", tuple((int(w), k) for w, k in self.outputs))
        object.__setattr__(self, "ops", tuple(self.ops))
        self._validate()

    # -- construction helpers ------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "Circuit":
        wires = tuple((i, QBIT) for i in range(n))
        return cls(wires, (), wires)

    @classmethod
    def from_gates(cls, n: int, ops: Iterable[CircOp]) -> "Circuit":
        """Pure circuit on wires 0..n-1 in order."""
        wires = tuple((i, QBIT) for i in range(n))
        return cls(wires, tuple(ops), wires)

    def _validate(self):
        live: dict[int, str] = {}
        seen: set[int] = set()
        for w, k in self.inputs:
            if k not in (QBIT, BIT):
                raise CircuitError(f"unknown wire kind {k!r}")
            if w in live:
                raise CircuitError(f"duplicate input wire {w}")
            live[w] = k
            seen.add(w)

        def need(w, kind=None, where=""):
            if w not in live:
                raise CircuitError(f"wire {w} is not live at {where}")
            if kind and live[w] != kind:
                raise CircuitError(f"wire {w} has kind {live[w]}, expected {kind} at {where}")

        def fresh(w, where):
            if w in seen:
                raise CircuitError(f"wire {w} is not fresh at {where}")
            seen.add(w)

        for i, op in enumerate(self.ops):
            where = f"op {i} ({type(op).__name__})"
            if isinstance(op, Init):
                if op.value not in (0, 1):
                    raise CircuitError(f"init value must be 0 or 1 at {where}")
                fresh(op.wire, where)
                live[op.wire] = QBIT
            elif isinstance(op, Gate):
                if op.name not in qnum.GATE_NAMES:
                    raise CircuitError(f"unknown gate {op.name!r} at {where}")
                if len(op.params) != qnum.gate_param_count(op.name):
                    raise CircuitError(f"wrong parameter count for {op.name} at {where}")
                if op.name != "MS" and len(op.targets) != qnum.gate_arity(op.name):
                    raise CircuitError(f"{op.name} needs {qnum.gate_arity(op.name)} target(s) at {where}")
                if not op.targets:
                    raise CircuitError(f"gate without targets at {where}")
                ws = op.wires()
                if len(set(ws)) != len(ws):
                    raise CircuitError(f"controls and targets overlap at {where}")
                for w in op.targets:
                    need(w, QBIT, where)
                for w, _ in op.controls:
                    need(w, None, where)
            elif isinstance(op, Measure):
                need(op.qwire, QBIT, where)
                del live[op.qwire]
                fresh(op.bwire, where)
                live[op.bwire] = BIT
            elif isinstance(op, Discard):
                need(op.wire, None, where)
                del live[op.wire]
            else:
                raise CircuitError(f"unknown op {op!r}")
        outs = dict(self.outputs)
        if len(outs) != len(self.outputs):
            raise CircuitError("duplicate output wire")
        if outs != live:
            raise CircuitError(
                f"outputs {sorted(outs.items())} do not match live wires {sorted(live.items())}"
            )

    # -- properties --------------------------------------------------------------

    @property
    def qbit_inputs(self) -> list:
        return [w for w, k in self.inputs if k == QBIT]

    @property
    def qbit_outputs(self) -> list:
        return [w for w, k in self.outputs if k == QBIT]

    def is_pure(self) -> bool:
        return all(isinstance(op, Gate) for op in self.ops)

    def first_impure(self):
        for i, op in enumerate(self.ops):
            if not isinstance(op, Gate):
                return i, op
        return None

    def wire_ids(self) -> set:
        ids = {w for w, _ in self.inputs}
        for op in self.ops:
            ids.update(op_wires(op))
        return ids

    def max_wire(self) -> int:
        return max(self.wire_ids(), default=-1)

    def width(self) -> int:
        """Peak number of simultaneously live qubit wires."""
        live = set(self.qbit_inputs)
        peak = len(live)
        for op in self.ops:
            if isinstance(op, Init):
                live.add(op.wire)
            elif isinstance(op, Measure):
                live.discard(op.qwire)
            elif isinstance(op, Discard):
                live.discard(op.wire)
            peak = max(peak, len(live))
        return peak

    def renamed(self, ren: dict) -> "Circuit":
        return Circuit(
            tuple((ren[w], k) for w, k in self.inputs),
            tuple(_rename_op(op, ren) for op in self.ops),
            tuple((ren[w], k) for w, k in self.outputs),
        )

    def __len__(self):
        return len(self.ops)


# -- combinators ---------------------------------------------------------------

def seq(c1: Circuit, c2: Circuit) -> Circuit:
    """Run ``c1`` then ``c2``; c2's inputs are wired to c1's outputs in order."""
    if [k for _, k in c1.outputs] != [k for _, k in c2.inputs]:
        raise CircuitError(
            f"cannot sequence: outputs {[k for _, k in c1.outputs]} vs inputs {[k for _, k in c2.inputs]}"
        )
    ren = {w2: w1 for (w1, _), (w2, _) in zip(c1.outputs, c2.inputs)}
    nxt = max(c1.max_wire(), c2.max_wire()) + 1
    for w in sorted(c2.wire_ids()):
        if w not in ren:
            ren[w] = nxt
            nxt += 1
    c2r = c2.renamed(ren)
    return Circuit(c1.inputs, c1.ops + c2r.ops, c2r.outputs)


def par(c1: Circuit, c2: Circuit) -> Circuit:
    """Side-by-side composition; c1's wires come first."""
    nxt = c1.max_wire() + 1
    ren = {}
    for w in sorted(c2.wire_ids()):
        ren[w] = nxt
        nxt += 1
    c2r = c2.renamed(ren)
    return Circuit(c1.inputs + c2r.inputs, c1.ops + c2r.ops, c1.outputs + c2r.outputs)


def invert_gate(g: Gate) -> Gate:
    if g.name in SELF_INVERSE:
        return g
    if g.name in ANGLE_GATES:
        return Gate(g.name, tuple(-p for p in g.params), g.controls, g.targets, g.dagger)
    return Gate(g.name, g.params, g.controls, g.targets, not g.dagger)


def inverse(c: Circuit) -> Circuit:
    bad = c.first_impure()
    if bad is not None:
        i, op = bad
        raise InversionError(f"cannot invert op {i}: {op!r} is not a unitary gate")
    return Circuit(c.outputs, tuple(invert_gate(g) for g in reversed(c.ops)), c.inputs)


def control(c: Circuit, polarity: str | bool = "positive") -> Circuit:
    """Add one fresh control wire, placed first, to every gate of ``c``."""
    bad = c.first_impure()
    if bad is not None:
        raise CircuitError(f"cannot control non-unitary op {bad[0]}: {bad[1]!r}")
    positive = polarity in ("positive", "pos", True)
    if not positive and polarity not in ("negative", "neg", False):
        raise CircuitError(f"unknown polarity {polarity!r}")
    w = c.max_wire() + 1
    ops = tuple(
        Gate(g.name, g.params, ((w, positive),) + g.controls, g.targets, g.dagger) for g in c.ops
    )
    return Circuit(((w, QBIT),) + c.inputs, ops, ((w, QBIT),) + c.outputs)


# -- counting ------------------------------------------------------------------------

_IMPLICIT_CONTROLS = {"CNOT": 1, "TOFFOLI": 2}


def gate_key(g: Gate) -> str:
    """Counting name: X-family gates are named by total control count."""
    base = g.name
    nctl = len(g.controls)
    if base in _IMPLICIT_CONTROLS:
        nctl += _IMPLICIT_CONTROLS[base]
        base = "X"
    if base in ("X", "NOT"):
        return {0: "NOT", 1: "CNOT", 2: "TOFFOLI"}.get(nctl, f"{'C' * nctl}-NOT")
    if g.dagger:
        base = DAGGER_NAMES.get(base, base + "DG")
    return base if nctl == 0 else f"{'C' * nctl}-{base}"


def cnot_equivalent(g: Gate) -> bool:
    return gate_key(g) == "CNOT"


def gate_count(c: Circuit) -> dict:
    gates = Counter()
    init = measure = discard = 0
    for op in c.ops:
        if isinstance(op, Gate):
            gates[gate_key(op)] += 1
        elif isinstance(op, Init):
            init += 1
        elif isinstance(op, Measure):
            measure += 1
        else:
            discard += 1
    return {
        "gates": dict(sorted(gates.items())),
        "total_gates": sum(gates.values()),
        "init": init,
        "measure": measure,
        "discard": discard,
        "qubits": c.width(),
        "ancillas": init,
    }


# -- simulation -------------------------------------------------------------------------

def _full_gate(g: Gate, skip_controls=()) -> np.ndarray:
    n_t = len(g.targets)
    u = qnum.gate_matrix(g.name, g.params, dagger=g.dagger, n_qubits=n_t if g.name == "MS" else None)
    for w, pos in reversed(g.controls):
        if w in skip_controls:
            continue
        u = qnum.controlled(u, "positive" if pos else "negative")
    return u


class _Sim:
    """Batched state over live qubit wires; the last axis indexes the batch."""

    def __init__(self, wires: list, psi: np.ndarray, bits: dict, max_qubits=None):
        self.live = list(wires)
        self.psi = psi
        self.bits = dict(bits)
        self.max_qubits = max_qubits
        self.record: list[int] = []

    def axis(self, w):
        return self.live.index(w)

    def gate(self, g: Gate):
        classical = {w for w, _ in g.controls if w in self.bits}
        for w, pos in g.controls:
            if w in self.bits and self.bits[w] != int(pos):
                return
        u = _full_gate(g, classical)
        wires = [w for w, _ in g.controls if w not in classical] + list(g.targets)
        axes = [self.axis(w) for w in wires]
        k = len(axes)
        t = u.reshape([2] * (2 * k))
        psi = np.tensordot(t, self.psi, axes=(list(range(k, 2 * k)), axes))
        nd = self.psi.ndim
        rest = [a for a in range(nd) if a not in axes]
        self.psi = np.moveaxis(psi, list(range(nd)), axes + rest)

    def init(self, w, value):
        qnum.check_width(len(self.live) + 1, self.max_qubits)
        ket = np.zeros(2, dtype=complex)
        ket[value] = 1
        # new wire goes last among qubit axes, before the batch axis
        self.psi = np.moveaxis(np.multiply.outer(ket, self.psi), 0, -2)
        self.live.append(w)

    def _drop(self, w, value):
        a = self.axis(w)
        self.psi = np.take(self.psi, value, axis=a)
        self.live.remove(w)

    def measure(self, qw, bw, rng):
        a = self.axis(qw)
        if self.psi.shape[-1] != 1:
            raise CircuitError("measurement is only defined on a single state")
        probs = np.abs(self.psi[..., 0]) ** 2
        p1 = float(np.take(probs, 1, axis=a).sum())
        p0 = float(np.take(probs, 0, axis=a).sum())
        if p0 < qnum.MIN_BRANCH_PROB:
            bit = 1
        elif p1 < qnum.MIN_BRANCH_PROB:
            bit = 0
        else:
            bit = 0 if rng.random() < p0 / (p0 + p1) else 1
        self._drop(qw, bit)
        self.psi = self.psi / np.linalg.norm(self.psi)
        self.bits[bw] = bit
        self.record.append(bit)

    def discard(self, w):
        if w in self.bits:
            del self.bits[w]
            return
        a = self.axis(w)
        probs = np.abs(self.psi) ** 2
        total = probs.sum(axis=tuple(i for i in range(self.psi.ndim) if i not in (a, self.psi.ndim - 1)))
        # total[b, batch]; every batch column must sit in one basis value
        for j in range(total.shape[1]):
            col = total[:, j] / total[:, j].sum()
            if min(col) > qnum.NORM_TOL:
                raise CircuitError(f"unsafe discard of wire {w}: not in a classical basis state")
        value = np.argmax(total, axis=0)
        if np.all(value == value[0]):
            self._drop(w, int(value[0]))
        else:
            # batch columns disagree on the discarded value; sum out (each column has one nonzero)
            self.psi = self.psi.sum(axis=a)
            self.live.remove(w)

    def run(self, ops, rng):
        for op in ops:
            if isinstance(op, Gate):
                self.gate(op)
            elif isinstance(op, Init):
                self.init(op.wire, op.value)
            elif isinstance(op, Measure):
                self.measure(op.qwire, op.bwire, rng)
            else:
                self.discard(op.wire)

    def ordered(self, wires):
        axes = [self.axis(w) for w in wires]
        return np.transpose(self.psi, axes + [self.psi.ndim - 1])


def to_unitary(c: Circuit, max_qubits: int | None = None) -> np.ndarray:
    """Matrix of a pure circuit: inputs index columns, outputs index rows."""
    bad = c.first_impure()
    if bad is not None:
        raise CircuitError(f"to_unitary needs a pure circuit; op {bad[0]} is {bad[1]!r}")
    wires = c.qbit_inputs
    n = len(wires)
    qnum.check_width(n, max_qubits)
    dim = 1 << n
    psi = np.eye(dim, dtype=complex).reshape([2] * n + [dim])
    sim = _Sim(wires, psi, {}, max_qubits)
    sim.run(c.ops, None)
    return sim.ordered(c.qbit_outputs).reshape(dim, dim)


def run(c: Circuit, state: StateVector | None = None, rng=None, bits: Sequence[int] = (),
        max_qubits: int | None = None):
    """Simulate ``c`` on ``state`` (qubit inputs, in order) and bit inputs ``bits``.

    Returns ``(output_state, record)``: the state of the qubit outputs in
    output order and the measurement outcomes in op order.
    """
    qin = c.qbit_inputs
    bin_ = [w for w, k in c.inputs if k == BIT]
    if state is None:
        state = StateVector.basis([0] * len(qin)) if qin else StateVector.empty()
    if state.n_qubits != len(qin):
        raise CircuitError(f"input state has {state.n_qubits} qubits, circuit expects {len(qin)}")
    if len(bits) != len(bin_):
        raise CircuitError(f"circuit expects {len(bin_)} bit inputs, got {len(bits)}")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(0))
    psi = state.amps.reshape([2] * len(qin) + [1])
    sim = _Sim(qin, psi, dict(zip(bin_, bits)), max_qubits)
    sim.run(c.ops, rng)
    out = sim.ordered(c.qbit_outputs).reshape(-1)
    return StateVector(out), sim.record


def output_bits(c: Circuit, state=None, rng=None, bits=()):
    """Like :func:`run` but also returns the values of the bit outputs."""
    qin = c.qbit_inputs
    bin_ = [w for w, k in c.inputs if k == BIT]
    if state is None:
        state = StateVector.basis([0] * len(qin)) if qin else StateVector.empty()
    rng = np.random.Generator(np.random.Philox(0)) if rng is None else rng
    sim = _Sim(qin, state.amps.reshape([2] * len(qin) + [1]), dict(zip(bin_, bits)))
    sim.run(c.ops, rng)
    out = StateVector(sim.ordered(c.qbit_outputs).reshape(-1))
    return out, [sim.bits[w] for w, k in c.outputs if k == BIT], sim.record


# -- JSON ---------------------------------------------------------------------------------

def op_to_json(op: CircOp) -> dict:
    if isinstance(op, Gate):
        name = DAGGER_NAMES.get(op.name, op.name) if op.dagger else op.name
        out = {
            "op": "gate",
            "name": name,
            "params": [float(p) for p in op.params],
            "controls": [[w, "pos" if p else "neg"] for w, p in op.controls],
            "targets": list(op.targets),
        }
        if op.dagger and op.name not in DAGGER_NAMES:
            out["dagger"] = True
        return out
    if isinstance(op, Init):
        return {"op": "init", "wire": op.wire, "value": op.value}
    if isinstance(op, Measure):
        return {"op": "measure", "qwire": op.qwire, "bwire": op.bwire}
    return {"op": "discard", "wire": op.wire}


def op_from_json(d: dict) -> CircOp:
    kind = d.get("op")
    if kind == "gate":
        name = d["name"]
        dagger = name in _FROM_DAGGER_NAME or bool(d.get("dagger", False))
        name = _FROM_DAGGER_NAME.get(name, name)
        ctl = []
        for w, p in d.get("controls", []):
            if p not in ("pos", "neg"):
                raise CircuitError(f"bad control polarity {p!r}")
            ctl.append((int(w), p == "pos"))
        return Gate(name, tuple(float(p) for p in d.get("params", [])), tuple(ctl),
                    tuple(int(t) for t in d["targets"]), dagger)
    if kind == "init":
        return Init(int(d["wire"]), int(d["value"]))
    if kind == "measure":
        return Measure(int(d["qwire"]), int(d["bwire"]))
    if kind == "discard":
        return Discard(int(d["wire"]))
    raise CircuitError(f"unknown op kind {kind!r}")


def to_json_obj(c: Circuit) -> dict:
    return {
        "inputs": [{"id": w, "kind": k} for w, k in c.inputs],
        "ops": [op_to_json(op) for op in c.ops],
        "outputs": [{"id": w, "kind": k} for w, k in c.outputs],
    }


def from_json_obj(d: dict) -> Circuit:
    try:
        return Circuit(
            tuple((int(x["id"]), x["kind"]) for x in d["inputs"]),
            tuple(op_from_json(o) for o in d["ops"]),
            tuple((int(x["id"]), x["kind"]) for x in d["outputs"]),
        )
    except CircuitError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CircuitError(f"malformed circuit JSON: {exc!r}") from exc


def dumps(c: Circuit, **kw) -> str:
    return json.dumps(to_json_obj(c), **kw)


def loads(text: str) -> Circuit:
    return from_json_obj(json.loads(text))

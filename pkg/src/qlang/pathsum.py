"""Concrete sum-over-paths semantics of circuits.

A path-sum maps ``|x>`` to
``2^(-k/2) Σ_y exp(2iπ·P(x, y)/2^m) |f(x, y)>`` with ``P`` a multilinear
integer polynomial (mod ``2^m``) and ``f`` a vector of boolean polynomials in
XOR-of-AND normal form. Variables are integers; monomials are frozensets.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import qnum
from .circuit import Circuit, Discard, Gate, Init

VAR_BUDGET = 22
ONE = frozenset()  # the empty monomial is the constant 1


class PathSumError(ValueError):
    pass


class Unsupported(PathSumError):
    pass


# -- boolean polynomials ---------------------------------------------------------------

@dataclass(frozen=True)
class BoolPoly:
    monos: frozenset = frozenset()

    @classmethod
    def var(cls, v: int) -> "BoolPoly":
        return cls(frozenset({frozenset({v})}))

    @classmethod
    def const(cls, b: int) -> "BoolPoly":
        return cls(frozenset({ONE}) if b else frozenset())

    @property
    def constant(self) -> int:
        return int(ONE in self.monos)

    def __xor__(self, other: "BoolPoly") -> "BoolPoly":
        return BoolPoly(self.monos ^ other.monos)

    def __and__(self, other: "BoolPoly") -> "BoolPoly":
        out: set = set()
        for a in self.monos:
            for b in other.monos:
                out ^= {a | b}
        return BoolPoly(frozenset(out))

    def variables(self) -> set:
        return set().union(*self.monos) if self.monos else set()

    def subst(self, sub: dict) -> "BoolPoly":
        out = BoolPoly()
        for mono in self.monos:
            term = BoolPoly.const(1)
            for v in mono:
                term = term & sub.get(v, BoolPoly.var(v))
            out = out ^ term
        return out

    def evaluate(self, cols: dict, size: int) -> np.ndarray:
        acc = np.zeros(size, dtype=np.int64)
        for mono in self.monos:
            t = np.ones(size, dtype=np.int64)
            for v in mono:
                t &= cols[v]
            acc ^= t
        return acc

    def __str__(self):
        if not self.monos:
            return "0"
        return " ⊕ ".join(_mono_str(m) for m in sorted(self.monos, key=_mono_key))


def _mono_key(m):
    return (len(m), sorted(m))


def _mono_str(m):
    return "1" if not m else "·".join(f"v{v}" for v in sorted(m))


# -- phase polynomials --------------------------------------------------------------------

@dataclass(frozen=True)
class PhasePoly:
    """Integer coefficients mod ``2^m`` on multilinear monomials."""

    m: int = 0
    terms: tuple = ()  # sorted (monomial, coefficient) pairs

    @classmethod
    def build(cls, m: int, terms: dict) -> "PhasePoly":
        mod = 1 << m
        clean = {k: c % mod for k, c in terms.items() if c % mod}
        return cls(m, tuple(sorted(clean.items(), key=lambda kv: _mono_key(kv[0]))))

    def as_dict(self) -> dict:
        return dict(self.terms)

    def lift(self, m: int) -> "PhasePoly":
        if m < self.m:
            raise PathSumError("cannot lower the phase exponent")
        s = 1 << (m - self.m)
        return PhasePoly.build(m, {k: c * s for k, c in self.terms})

    def variables(self) -> set:
        return set().union(*(k for k, _ in self.terms)) if self.terms else set()

    def reduced(self) -> "PhasePoly":
        """Smallest exponent representing the same phase function."""
        p = self
        while p.m > 0 and all(c % 2 == 0 for _, c in p.terms):
            p = PhasePoly.build(p.m - 1, {k: c // 2 for k, c in p.terms})
        return p

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}·{_mono_str(k)}" for k, c in self.terms) + f" (mod 2^{self.m})"


def _pmul(a: dict, b: dict, mod: int) -> dict:
    out: dict = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka | kb
            out[k] = (out.get(k, 0) + ca * cb) % mod
    return out


def _padd(a: dict, b: dict, mod: int, scale: int = 1) -> dict:
    out = dict(a)
    for k, c in b.items():
        out[k] = (out.get(k, 0) + scale * c) % mod
    return out


def int_lift(p: BoolPoly, m: int) -> dict:
    """Integer-valued polynomial equal to ``p`` on booleans, mod ``2^m`` (a ⊕ b = a + b - 2ab)."""
    mod = 1 << m
    acc: dict = {}
    for mono in sorted(p.monos, key=_mono_key):
        t = {mono: 1}
        acc = _padd(_padd(acc, t, mod), _pmul(acc, t, mod), mod, -2)
    return {k: c for k, c in acc.items() if c}


def _phase_subst(phase: PhasePoly, sub: dict, m: int) -> dict:
    """Substitute boolean polynomials into ``phase``, result mod ``2^m`` (``m >= phase.m``)."""
    mod = 1 << m
    scale = 1 << (m - phase.m)
    lifted = {}
    out: dict = {}
    for mono, c in phase.terms:
        term = {ONE: c * scale % mod}
        for v in mono:
            if v in sub:
                if v not in lifted:
                    lifted[v] = int_lift(sub[v], m)
                term = _pmul(term, lifted[v], mod)
            else:
                term = _pmul(term, {frozenset({v}): 1}, mod)
        out = _padd(out, term, mod)
    return out


# -- path-sums ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PathSum:
    in_vars: tuple
    path_vars: tuple
    phase: PhasePoly
    outs: tuple
    norm: int = 0  # amplitude factor 2^(-norm/2)

    @property
    def m(self) -> int:
        return self.phase.m

    @property
    def k(self) -> int:
        return self.norm

    @property
    def n_in(self) -> int:
        return len(self.in_vars)

    @property
    def n_out(self) -> int:
        return len(self.outs)

    def next_var(self) -> int:
        used = set(self.in_vars) | set(self.path_vars)
        return max(used) + 1 if used else 0

    def lifted(self, m: int) -> "PathSum":
        return PathSum(self.in_vars, self.path_vars, self.phase.lift(m), self.outs, self.norm)

    def __str__(self):
        ys = ",".join(f"v{v}" for v in self.path_vars)
        outs = ", ".join(str(o) for o in self.outs)
        return f"2^(-{self.norm}/2) Σ_[{ys}] e^(2iπ·({self.phase})) |{outs}>"


def identity(n: int) -> PathSum:
    xs = tuple(range(n))
    return PathSum(xs, (), PhasePoly(), tuple(BoolPoly.var(v) for v in xs))


def _cleanup(ps: PathSum) -> PathSum:
    """Drop path variables that no longer occur: each contributes a factor 2."""
    phase = ps.phase.reduced()
    used = phase.variables().union(*(o.variables() for o in ps.outs))
    keep = tuple(v for v in ps.path_vars if v in used)
    dropped = len(ps.path_vars) - len(keep)
    return PathSum(ps.in_vars, keep, phase, ps.outs, ps.norm - 2 * dropped)


def _combine_phase(parts: list, m: int) -> PhasePoly:
    acc: dict = {}
    mod = 1 << m
    for d in parts:
        acc = _padd(acc, d, mod)
    return PhasePoly.build(m, acc)


def _rz_units(theta: float, max_m: int = 16) -> tuple[int, int]:
    """``theta = 2π·c/2^m`` with the smallest such ``m``."""
    f = Fraction(theta / (2 * np.pi)).limit_denominator(1 << max_m)
    if abs(float(f) * 2 * np.pi - theta) > 1e-12 or f.denominator & (f.denominator - 1):
        raise Unsupported(f"RZ angle {theta} is not a dyadic multiple of 2π")
    return f.numerator, f.denominator.bit_length() - 1


_DIAG_PHASE = {"Z": (1, 1), "S": (1, 2), "T": (1, 3)}  # coefficient, m
SUPPORTED = frozenset({"I", "X", "NOT", "Z", "S", "T", "RZ", "CNOT", "SWAP", "TOFFOLI", "H"})


def apply_gate(ps: PathSum, g: Gate, pos: dict) -> PathSum:
    """Compose one gate after ``ps``; ``pos`` maps wire ids to output positions."""
    if g.name not in SUPPORTED:
        raise Unsupported(f"gate {g.name} has no path-sum form here")
    outs = list(ps.outs)
    ctl = BoolPoly.const(1)
    for w, positive in g.controls:
        lit = outs[pos[w]] if positive else outs[pos[w]] ^ BoolPoly.const(1)
        ctl = ctl & lit
    name, targets = g.name, [pos[w] for w in g.targets]
    if name == "CNOT":
        ctl, targets = ctl & outs[targets[0]], targets[1:]
        name = "X"
    elif name == "TOFFOLI":
        ctl, targets = ctl & outs[targets[0]] & outs[targets[1]], targets[2:]
        name = "X"
    if name == "I":
        return ps
    if name in ("X", "NOT"):
        outs[targets[0]] = outs[targets[0]] ^ ctl
        return PathSum(ps.in_vars, ps.path_vars, ps.phase, tuple(outs), ps.norm)
    if name == "SWAP":
        a, b = targets
        if ctl.monos == frozenset({ONE}):
            outs[a], outs[b] = outs[b], outs[a]
        else:
            d = (outs[a] ^ outs[b]) & ctl
            outs[a], outs[b] = outs[a] ^ d, outs[b] ^ d
        return PathSum(ps.in_vars, ps.path_vars, ps.phase, tuple(outs), ps.norm)
    if name in _DIAG_PHASE or name == "RZ":
        t = targets[0]
        if name == "RZ":
            # RZ(2π·c/2^e) = e^{-iπc/2^e}·diag(1, e^{2iπc/2^e}); exact with exponent e+1
            c, e = _rz_units(g.params[0])
            if g.dagger:
                c = -c
            m_g = e + 1
            body = {ONE: -c, frozenset({t}): 2 * c}
        else:
            c, m_g = _DIAG_PHASE[name]
            if g.dagger:
                c = -c
            body = None
        m = max(ps.m, m_g)
        mod = 1 << m
        scale = 1 << (m - m_g)
        if body is None:
            added = {k: c * scale * v % mod for k, v in int_lift(ctl & outs[t], m).items()}
        else:
            lit = int_lift(outs[t], m)
            cl = int_lift(ctl, m)
            rz = _padd({ONE: -c * scale}, lit, mod, 2 * c * scale)
            added = _pmul(cl, rz, mod)
        phase = _combine_phase([ps.phase.lift(m).as_dict(), added], m)
        return _cleanup(PathSum(ps.in_vars, ps.path_vars, phase, tuple(outs), ps.norm))
    if name == "H":
        t = targets[0]
        if g.controls:
            raise Unsupported("controlled H has no path-sum form here")
        y = ps.next_var()
        m = max(ps.m, 1)
        half = 1 << (m - 1)
        added = {k: v * half % (1 << m) for k, v in _pmul({frozenset({y}): 1}, int_lift(outs[t], m), 1 << m).items()}
        outs[t] = BoolPoly.var(y)
        phase = _combine_phase([ps.phase.lift(m).as_dict(), added], m)
        return _cleanup(PathSum(ps.in_vars, ps.path_vars + (y,), phase, tuple(outs), ps.norm + 1))
    raise Unsupported(f"gate {g.name} has no path-sum form here")


def gate_pathsum(name: str, params=(), dagger: bool = False) -> PathSum:
    """Canonical path-sum of a single gate on its own wires."""
    if name not in SUPPORTED:
        raise Unsupported(f"gate {name} has no path-sum form here")
    arity = qnum.gate_arity(name)
    g = Gate(name, tuple(float(p) for p in params), (), tuple(range(arity)), dagger)
    return apply_gate(identity(arity), g, {w: w for w in range(arity)})


def _rename(ps: PathSum, start: int) -> tuple[PathSum, dict]:
    ren = {v: start + i for i, v in enumerate(ps.in_vars + ps.path_vars)}
    sub = {v: BoolPoly.var(w) for v, w in ren.items()}
    phase = PhasePoly.build(ps.m, {frozenset(ren[v] for v in k): c for k, c in ps.phase.terms})
    outs = tuple(o.subst(sub) for o in ps.outs)
    return PathSum(tuple(ren[v] for v in ps.in_vars), tuple(ren[v] for v in ps.path_vars), phase, outs, ps.norm), ren


def compose(a: PathSum, b: PathSum) -> PathSum:
    """``a`` then ``b``: matrix ``to_matrix(b) @ to_matrix(a)``."""
    if a.n_out != b.n_in:
        raise PathSumError(f"arity mismatch: {a.n_out} outputs into {b.n_in} inputs")
    b, _ = _rename(b, a.next_var())
    sub = dict(zip(b.in_vars, a.outs))
    m = max(a.m, b.m)
    phase = _combine_phase([a.phase.lift(m).as_dict(), _phase_subst(b.phase, sub, m)], m)
    outs = tuple(o.subst(sub) for o in b.outs)
    return _cleanup(PathSum(a.in_vars, a.path_vars + b.path_vars, phase, outs, a.norm + b.norm))


def tensor(a: PathSum, b: PathSum) -> PathSum:
    b, _ = _rename(b, a.next_var())
    m = max(a.m, b.m)
    phase = _combine_phase([a.phase.lift(m).as_dict(), b.phase.lift(m).as_dict()], m)
    return PathSum(a.in_vars + b.in_vars, a.path_vars + b.path_vars, phase, a.outs + b.outs, a.norm + b.norm)


def to_matrix(ps: PathSum, budget: int = VAR_BUDGET) -> np.ndarray:
    """Exact interpretation by enumerating inputs and path variables."""
    vs = ps.in_vars + ps.path_vars
    nv = len(vs)
    if nv > budget:
        raise PathSumError(f"{nv} variables exceed the enumeration budget of {budget}")
    size = 1 << nv
    idx = np.arange(size, dtype=np.int64)
    cols = {v: (idx >> (nv - 1 - i)) & 1 for i, v in enumerate(vs)}
    phase = np.zeros(size, dtype=np.int64)
    for mono, c in ps.phase.terms:
        t = np.ones(size, dtype=np.int64)
        for v in mono:
            t &= cols[v]
        phase += c * t
    mod = 1 << ps.m
    amp = np.exp(2j * np.pi * (phase % mod) / mod) * 2.0 ** (-ps.norm / 2)
    out_idx = np.zeros(size, dtype=np.int64)
    for o in ps.outs:
        out_idx = (out_idx << 1) | o.evaluate(cols, size)
    in_idx = idx >> len(ps.path_vars)
    d_out, d_in = 1 << ps.n_out, 1 << ps.n_in
    flat = out_idx * d_in + in_idx
    re = np.bincount(flat, weights=amp.real, minlength=d_out * d_in)
    im = np.bincount(flat, weights=amp.imag, minlength=d_out * d_in)
    return (re + 1j * im).reshape(d_out, d_in)


def circuit_pathsum(c: Circuit) -> PathSum:
    """Path sum of a circuit; Init adds a constant wire, Discard needs one."""
    wires = [w for w, _ in c.inputs]
    pos = {w: i for i, w in enumerate(wires)}
    ps = identity(len(wires))
    for i, op in enumerate(c.ops):
        if isinstance(op, Init):
            pos[op.wire] = len(ps.outs)
            ps = replace(ps, outs=ps.outs + (BoolPoly.const(op.value),))
        elif isinstance(op, Discard):
            j = pos.pop(op.wire)
            if ps.outs[j].variables():
                raise Unsupported(f"op {i}: discarded wire {op.wire} is not in a basis state")
            pos = {w: k - (k > j) for w, k in pos.items()}
            ps = replace(ps, outs=ps.outs[:j] + ps.outs[j + 1:])
        elif isinstance(op, Gate):
            try:
                ps = apply_gate(ps, op, pos)
            except Unsupported as e:
                raise Unsupported(f"op {i}: {e}") from None
        else:
            raise Unsupported(f"op {i} is a measurement")
    order = [pos[w] for w, _ in c.outputs]
    return _cleanup(PathSum(ps.in_vars, ps.path_vars, ps.phase, tuple(ps.outs[i] for i in order), ps.norm))


@dataclass
class Verdict:
    equivalent: bool
    witness: tuple | None = None  # input basis state where the circuits differ
    distance: float = 0.0

    def __str__(self):
        if self.equivalent:
            return "EQUIV"
        bits = "".join(str(b) for b in self.witness)
        return f"DISTINCT |{bits}>"


def equiv(c1: Circuit, c2: Circuit, tol: float = 1e-8, max_qubits: int = 6) -> Verdict:
    """Global-phase equality of the path-sum interpretations."""
    n1, n2 = len(c1.inputs), len(c2.inputs)
    if n1 != n2 or len(c1.outputs) != len(c2.outputs):
        raise PathSumError("circuits have different arities")
    qnum.check_width(n1, max_qubits)
    a = to_matrix(circuit_pathsum(c1))
    b = to_matrix(circuit_pathsum(c2))
    dist = qnum.phase_distance(a, b)
    if dist <= tol:
        return Verdict(True, None, dist)
    inner = np.vdot(b.ravel(), a.ravel())
    phase = inner / abs(inner) if abs(inner) > 1e-12 else 1.0
    diff = np.linalg.norm(a - phase * b, axis=0)
    x = int(np.argmax(diff))
    return Verdict(False, tuple((x >> (n1 - 1 - i)) & 1 for i in range(n1)), dist)

"""Circuit synthesis from dense unitaries.

Two routes: an exact one through Householder QR, realizing every
reflection with uniformly controlled rotations and CNOTs, and a numerical
one fitting a trapped-ion layer ansatz (rotation columns and MS gates)
with BFGS.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qnum
from .circuit import Circuit, Gate, gate_count, invert_gate
from .qnum import HouseholderFactor, householder_factor


class SynthError(ValueError):
    pass


# -- Householder QR ----------------------------------------------------------------------

@dataclass
class HouseholderDecomp:
    """``U = factors[0] @ factors[1] @ ... @ diag(exp(i·phases))``."""

    factors: list
    diagonal_phases: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.diagonal_phases)

    def reconstruct(self) -> np.ndarray:
        out = np.diag(np.exp(1j * np.asarray(self.diagonal_phases)))
        for f in reversed(self.factors):
            out = f.apply(out)
        return out


def householder_qr(u: np.ndarray, tol: float = 1e-8) -> HouseholderDecomp:
    """Zero ``u`` column by column with reflections; R ends up diagonal.

    For a unitary input, once the sub-diagonal of a column is cleared the
    rest of its row is zero too, so the triangular factor is a diagonal of
    unimodular entries.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise SynthError("expected a square matrix")
    if not qnum.is_unitary(u, tol):
        raise SynthError("matrix is not unitary within tolerance")
    a = u.copy()
    factors = []
    for j in range(a.shape[0] - 1):
        f = householder_factor(a[:, j], j)
        if f.is_identity():
            continue
        a = f.apply(a)
        factors.append(f)
    return HouseholderDecomp(factors, np.angle(np.diag(a)))


# -- building blocks ---------------------------------------------------------------------

def _cx(c, t):
    return Gate("CNOT", targets=(c, t))


def _rot(axis, angle, wire):
    return Gate(axis, (float(angle),), targets=(wire,))


def _gray(i):
    return i ^ (i >> 1)


def multiplexed_rotation(axis: str, angles, controls, target, reverse: bool = False) -> list:
    """Uniformly controlled rotation: ``axis(angles[c])`` on ``target`` when controls read ``c``.

    Gray-code construction with ``2**k`` CNOTs for ``k`` controls. The
    standard pattern ends with a CNOT from ``controls[0]``; ``reverse``
    starts with it instead.
    """
    k = len(controls)
    n_ang = 1 << k
    angles = np.asarray(angles, dtype=float)
    if angles.size != n_ang:
        raise SynthError(f"{k} controls need {n_ang} angles")
    if k == 0:
        return [_rot(axis, angles[0], target)]
    seq = []
    for i in range(n_ang):
        seq.append(("R", None))
        flip = _gray(i) ^ _gray((i + 1) % n_ang)
        seq.append(("C", k - flip.bit_length()))
    if reverse:
        seq.reverse()
    masks = []
    mask = 0
    for kind, q in seq:
        if kind == "R":
            masks.append(mask)
        else:
            mask ^= 1 << (k - 1 - q)
    # effective angle for control value c is sum_i (-1)^{c·mask_i} theta_i
    signs = np.array([[(-1) ** bin(c & m).count("1") for m in masks] for c in range(n_ang)], dtype=float)
    thetas = signs.T @ angles / n_ang
    out, it = [], iter(thetas)
    for kind, q in seq:
        if kind == "R":
            out.append(_rot(axis, next(it), target))
        else:
            out.append(_cx(controls[q], target))
    return out


def diagonal_gates(phases, wires, reverse_top: bool = False) -> tuple[list, float]:
    """Gates for ``diag(exp(i·phases))`` over ``wires`` (first wire high) and the global phase.

    The R_z multiplexor on the last wire comes first; ``reverse_top``
    selects its CNOT-first pattern.
    """
    phases = np.asarray(phases, dtype=float)
    wires = list(wires)
    if phases.size != 1 << len(wires):
        raise SynthError("phase vector does not match the wire count")
    out = []
    first = True
    while wires:
        pairs = phases.reshape(-1, 2)
        angles = pairs[:, 1] - pairs[:, 0]
        if np.any(np.abs(angles) > 1e-14):
            out += multiplexed_rotation("RZ", angles, wires[:-1], wires[-1], reverse=reverse_top and first)
        first = False
        phases = pairs.mean(axis=1)
        wires = wires[:-1]
    return out, float(phases[0])


def prepare_real_state(r, wires) -> list:
    """RY cascade ``W`` with ``W|0..0> = r`` for a real non-negative unit vector ``r``."""
    r = np.asarray(r, dtype=float)
    m = len(wires)
    out = []
    for k in range(m):
        blocks = r.reshape(1 << k, 2, -1)
        n0 = np.linalg.norm(blocks[:, 0, :], axis=1)
        n1 = np.linalg.norm(blocks[:, 1, :], axis=1)
        angles = 2 * np.arctan2(n1, n0)
        if k == 0 or np.any(np.abs(angles) > 1e-14):
            out += multiplexed_rotation("RY", angles, wires[:k], wires[k])
    return out


def _inverse_ops(ops):
    return [invert_gate(g) for g in reversed(ops)]


def _block_of(u: np.ndarray, n: int, tol=1e-15):
    """Smallest aligned block (prefix, low-qubit count) containing the support of ``u``."""
    idx = np.nonzero(np.abs(u) > tol)[0]
    lo, hi = int(idx.min()), int(idx.max())
    m = 0
    while (lo >> m) != (hi >> m):
        m += 1
    return lo >> m, m


def simplify(ops: list, lookback: int = 64) -> list:
    """Cancel CNOT pairs and merge rotations across commuting gates."""
    out: list = []
    for g in ops:
        if g.name in ("RX", "RY", "RZ") and abs(_wrap(g.params[0])) < 1e-13:
            continue
        j = len(out) - 1
        merged = False
        while j >= 0 and len(out) - j <= lookback:
            h = out[j]
            if g.name == "CNOT" and h.name == "CNOT" and h.targets == g.targets and not h.controls and not g.controls:
                del out[j]
                merged = True
                break
            if g.name in ("RX", "RY", "RZ") and h.name == g.name and h.targets == g.targets:
                angle = _wrap(h.params[0] + g.params[0])
                if abs(angle) < 1e-13:
                    del out[j]
                else:
                    out[j] = _rot(g.name, angle, g.targets[0])
                merged = True
                break
            if not _commute(h, g):
                break
            j -= 1
        if not merged:
            out.append(g)
    return out


def _wrap(a):
    # rotations are 4π-periodic
    return (a + 2 * np.pi) % (4 * np.pi) - 2 * np.pi


def _commute(a: Gate, b: Gate) -> bool:
    wa, wb = set(a.wires()), set(b.wires())
    if not wa & wb:
        return True
    for x, y in ((a, b), (b, a)):
        if x.name == "CNOT" and y.name == "CNOT":
            (c1, t1), (c2, t2) = x.targets, y.targets
            return c1 != t2 and c2 != t1
        if x.name == "CNOT" and len(y.targets) == 1:
            c, t = x.targets
            w = y.targets[0]
            return (w == c and y.name == "RZ") or (w == t and y.name == "RX")
    return False


# -- reflections ------------------------------------------------------------------------------

def _n_qubits(dim):
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise SynthError("dimension must be a power of two")
    return n


def reflection_to_circuit(f: HouseholderFactor, n: int) -> Circuit:
    """Circuit equal to ``I - a|u><u|`` up to global phase.

    ``V Z V†`` where ``V = D·W`` prepares ``u/|u|`` on the smallest block
    of low qubits holding its support (``W`` an RY cascade, ``D`` a phase
    diagonal) and ``Z`` puts the reflection phase on that block's first
    basis state.
    """
    qnum.check_width(n, 6)
    if f.dim != 1 << n:
        raise SynthError(f"factor has dimension {f.dim}, expected {1 << n}")
    if f.is_identity():
        return Circuit.identity(n)
    norm2 = float(np.vdot(f.u, f.u).real)
    lam = 1 - f.a * norm2
    if abs(abs(lam) - 1) > 1e-8:
        raise SynthError("factor is not unitary")
    uhat = f.u / np.sqrt(norm2)
    p, m = _block_of(uhat, n)
    low = list(range(n - m, n))
    seg = uhat[p << m:(p + 1) << m]
    w_ops = prepare_real_state(np.abs(seg), low)
    d_ops, _ = diagonal_gates(np.angle(seg), low)
    center = np.zeros(1 << n)
    center[p << m] = np.angle(lam)
    z_ops, _ = diagonal_gates(center, range(n))
    v = w_ops + d_ops  # time order: W then D
    ops = _inverse_ops(v) + z_ops + v
    return Circuit.from_gates(n, simplify(ops))


# -- full synthesis ---------------------------------------------------------------------------

def synthesis_counts(c: Circuit) -> dict:
    g = gate_count(c)["gates"]
    return {
        "cnot": g.get("CNOT", 0),
        "rotations": sum(v for k, v in g.items() if k in ("RX", "RY", "RZ")),
        "gates": sum(g.values()),
    }


def synth_householder(u: np.ndarray) -> tuple[Circuit, dict]:
    """Exact synthesis through Householder QR; returns the circuit and counts.

    Each factor is written ``D_j R_j D_j†`` with ``R_j`` a real reflection
    on its support block and ``D_j`` a phase diagonal. Consecutive
    diagonals merge, and because only the values of ``D_j`` on the support
    matter, each merged diagonal acts on the block's low qubits only.
    """
    u = np.asarray(u, dtype=complex)
    n = _n_qubits(u.shape[0])
    qnum.check_width(n, 6)
    dec = householder_qr(u)
    d = 1 << n
    acc = np.ones(d, dtype=complex)  # accumulated D_j
    blocks = []  # matrix order: Δ_0 R_0 Δ_1 R_1 ... Λ
    for f in dec.factors:
        uhat = f.u / np.linalg.norm(f.u)
        p, m = _block_of(uhat, n)
        low = list(range(n - m, n))
        seg = uhat[p << m:(p + 1) << m]
        cur = acc[p << m:(p + 1) << m]
        delta = np.where(np.abs(seg) > 1e-15, np.angle(seg) - np.angle(cur), 0.0)
        acc = acc * np.tile(np.exp(1j * delta), d >> m)
        blocks.append(("delta", delta, low))
        blocks.append(("refl", np.abs(seg), p, m))
    final = np.angle(np.exp(1j * np.asarray(dec.diagonal_phases)) * acc.conj())
    blocks.append(("final", final))
    ops = []
    for b in reversed(blocks):  # time order
        if b[0] == "final":
            ops += diagonal_gates(b[1], range(n))[0]
        elif b[0] == "delta":
            ops += diagonal_gates(b[1], b[2], reverse_top=True)[0]
        else:
            _, r, p, m = b
            low = list(range(n - m, n))
            w = prepare_real_state(r, low)
            center = np.zeros(d)
            center[p << m] = np.pi
            ops += _inverse_ops(w) + diagonal_gates(center, range(n))[0] + w
    c = Circuit.from_gates(n, simplify(ops))
    return c, synthesis_counts(c)


# -- trapped-ion layers ---------------------------------------------------------------------------

def ms_gate(n: int, theta: float) -> np.ndarray:
    return qnum.ms_gate(n, theta)


def ms_layer_lower_bound(n: int) -> int:
    """Fewest MS layers for a universal layer topology: ceil((2^(n+1) - 2n - 2) / (2n + 1))."""
    n = int(n)
    if n < 1:
        raise SynthError("need at least one qubit")
    num = 2 ** (n + 1) - 2 * n - 2
    return -(-num // (2 * n + 1))


def param_count(n: int, layers: int) -> int:
    return layers * (n + 1) + n


@dataclass
class IonAnsatz:
    """Layers of a rotation column and an MS gate, then a final R_z column.

    Parameters per layer: ``n`` column angles then the MS angle; the final
    column adds ``n`` angles. Columns alternate between R_z (even layers)
    and R_x (odd layers): R_z and MS alone commute with the Z-parity and
    cannot reach a generic unitary.
    """

    n: int
    layers: int
    theta: np.ndarray = None

    def __post_init__(self):
        qnum.check_width(self.n, 6)
        if self.layers < 0:
            raise SynthError("layer count must be non-negative")
        if self.theta is None:
            self.theta = np.zeros(param_count(self.n, self.layers))
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.size != param_count(self.n, self.layers):
            raise SynthError(
                f"{self.layers} layers on {self.n} qubits take {param_count(self.n, self.layers)} parameters, "
                f"got {self.theta.size}"
            )

    def column_axes(self) -> list:
        return ["Z" if j % 2 == 0 else "X" for j in range(self.layers)] + ["Z"]

    def to_circuit(self) -> Circuit:
        """The ansatz as gates (R_z and R_x columns and MS) on wires 0..n-1."""
        ops, k, n = [], 0, self.n
        for axis in self.column_axes()[:-1]:
            ops += [Gate("R" + axis, (float(t),), (), (q,)) for q, t in enumerate(self.theta[k:k + n])]
            ops.append(Gate("MS", (float(self.theta[k + n]),), (), tuple(range(n))))
            k += n + 1
        ops += [Gate("RZ", (float(t),), (), (q,)) for q, t in enumerate(self.theta[k:k + n])]
        return Circuit.from_gates(n, ops)


class _AnsatzKernel:
    """Batched evaluation of the layer ansatz.

    MS is diagonal in the Hadamard basis and R_x = H R_z H, so an R_x column
    followed by MS is ``H (ms * z) H``.
    """

    def __init__(self, n: int, layers: int):
        self.n, self.layers = n, layers
        self.dim = 1 << n
        x = (np.arange(self.dim)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
        self.zsign = x - 0.5  # R_z(t) puts phase t·(x_q - 1/2) on qubit q
        pop = x.sum(axis=1)
        self.msw = (n - 2 * pop) ** 2 / 4.0
        self.hn = qnum.hadamard_tower(n)

    def eval(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        b, n, d = thetas.shape[0], self.n, self.dim
        a = np.broadcast_to(np.eye(d, dtype=complex), (b, d, d)).copy()
        k = 0
        for j in range(self.layers):
            z = np.exp(1j * thetas[:, k:k + n] @ self.zsign.T)
            ms = np.exp(1j * thetas[:, k + n, None] * self.msw[None, :])
            if j % 2 == 0:
                a = z[:, :, None] * a
            else:
                ms = ms * z
            a = np.einsum("ij,bj,jk,bkl->bil", self.hn, ms, self.hn, a, optimize=True)
            k += n + 1
        z = np.exp(1j * thetas[:, k:k + n] @ self.zsign.T)
        return z[:, :, None] * a


def ansatz_eval(a: IonAnsatz) -> np.ndarray:
    return _AnsatzKernel(a.n, a.layers).eval(a.theta)[0]


def synthesis_error(target: np.ndarray, u: np.ndarray) -> float:
    """``1 - |Tr(target† u)| / dim``, clipped to [0, 1]."""
    d = target.shape[0]
    return float(min(1.0, max(0.0, 1 - abs(np.vdot(target, u)) / d)))


class IonObjective:
    def __init__(self, target: np.ndarray, layers: int, h: float = 1e-6):
        target = np.asarray(target, dtype=complex)
        self.n = _n_qubits(target.shape[0])
        self.kernel = _AnsatzKernel(self.n, layers)
        self.target_conj = target.conj()
        self.h = h
        self.size = param_count(self.n, layers)

    def _errs(self, thetas):
        u = self.kernel.eval(thetas)
        tr = np.einsum("ij,bij->b", self.target_conj, u)
        return 1 - np.abs(tr) / self.kernel.dim

    def __call__(self, theta) -> float:
        return float(self._errs(theta)[0])

    def grad(self, theta, stencil: int = 3) -> np.ndarray:
        """Central finite differences; ``stencil=5`` uses the fourth-order formula."""
        p, h = theta.size, self.h
        eye = np.eye(p) * h
        if stencil == 3:
            e = self._errs(np.vstack([theta + eye, theta - eye]))
            return (e[:p] - e[p:]) / (2 * h)
        e = self._errs(np.vstack([theta + 2 * eye, theta + eye, theta - eye, theta - 2 * eye]))
        return (-e[:p] + 8 * e[p:2 * p] - 8 * e[2 * p:3 * p] + e[3 * p:]) / (12 * h)


@dataclass
class BFGSResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def bfgs(f, grad, x0, max_iter: int = 2000, gtol: float = 1e-8, c1: float = 1e-4) -> BFGSResult:
    """BFGS with an inverse-Hessian update and Armijo backtracking."""
    x = np.array(x0, dtype=float)
    fx, g = f(x), grad(x)
    p_dim = x.size
    hinv = np.eye(p_dim)
    first = True
    for it in range(max_iter):
        if np.max(np.abs(g)) < gtol:
            return BFGSResult(x, fx, it, True)
        d = -hinv @ g
        slope = g @ d
        if slope >= 0:
            hinv = np.eye(p_dim)
            d, slope = -g, -(g @ g)
        t = 1.0
        while True:
            x_new = x + t * d
            f_new = f(x_new)
            if f_new <= fx + c1 * t * slope:
                break
            t *= 0.5
            if t < 1e-14:
                # no decrease along the search direction: numerically stationary
                return BFGSResult(x, fx, it, bool(np.max(np.abs(g)) < 1e-6))
        g_new = grad(x_new)
        s, y = x_new - x, g_new - g
        sy = s @ y
        if sy > 1e-18:
            if first:
                hinv = np.eye(p_dim) * (sy / (y @ y))
                first = False
            rho = 1.0 / sy
            hy = hinv @ y
            hinv = hinv + rho * ((1 + rho * (y @ hy)) * np.outer(s, s) - np.outer(hy, s) - np.outer(s, hy))
        x, fx, g = x_new, f_new, g_new
    return BFGSResult(x, fx, max_iter, bool(np.max(np.abs(g)) < gtol))


@dataclass
class IonSynthResult:
    theta: np.ndarray
    error: float
    iterations: int
    converged: bool
    restarts: int


def bfgs_synth(target: np.ndarray, layers: int, rng, budget: int = 2000, restarts: int = 5) -> IonSynthResult:
    """Fit the ion ansatz to ``target``; best of ``restarts`` random starts."""
    if layers < 1:
        raise SynthError("need at least one layer")
    target = np.asarray(target, dtype=complex)
    if not qnum.is_unitary(target, 1e-8):
        raise SynthError("target is not unitary")
    obj = IonObjective(target, layers)
    best = None
    for _ in range(restarts):
        x0 = rng.uniform(0, 2 * np.pi, obj.size)
        res = bfgs(obj, obj.grad, x0, max_iter=budget)
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < 1e-12:
            break
    err = synthesis_error(target, obj.kernel.eval(best.x)[0])
    return IonSynthResult(best.x, err, best.iterations, best.converged, restarts)

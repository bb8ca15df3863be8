"""Dense complex linear algebra for small quantum registers.

Basis states are ordered lexicographically and wire 0 is the leftmost ket
symbol, i.e. the most significant bit of a basis index.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-9
EQ_TOL = 1e-10
MIN_BRANCH_PROB = 1e-12
MAX_QUBITS = 14

_SQRT2_INV = 1 / np.sqrt(2)


class QNumError(ValueError):
    pass


class WidthError(QNumError):
    pass


def check_width(n: int, max_qubits: int | None = None) -> None:
    limit = MAX_QUBITS if max_qubits is None else max_qubits
    if n > limit:
        raise WidthError(f"{n} qubits exceeds the configured maximum of {limit}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over ``2**n_qubits`` basis states."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size == 0 or 1 << n != amps.size:
            raise QNumError(f"state length {amps.size} is not a power of two")
        check_width(n)
        if not np.all(np.isfinite(amps)):
            raise QNumError("state has non-finite amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm**2 - 1) > NORM_TOL:
            raise QNumError(f"state is not normalized (norm^2 = {norm**2:.12g})")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def n_qubits(self) -> int:
        return self.amps.size.bit_length() - 1

    @classmethod
    def basis(cls, bits: Sequence[int] | str) -> "StateVector":
        bits = [int(b) for b in bits]
        idx = 0
        for b in bits:
            idx = (idx << 1) | b
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[idx] = 1.0
        return cls(amps)

    @classmethod
    def empty(cls) -> "StateVector":
        """The 0-qubit state, a single amplitude 1."""
        return cls(np.ones(1, dtype=complex))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def __len__(self):
        return self.amps.size

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, amps={np.round(self.amps, 6)!r})"


# -- gates -----------------------------------------------------------------

_FIXED = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}
_FIXED["NOT"] = _FIXED["X"]
_FIXED["TOFFOLI"] = np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]]


def _rx(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t):
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)


_PARAM = {"RX": _rx, "RY": _ry, "RZ": _rz}

GATE_NAMES = frozenset(_FIXED) | frozenset(_PARAM) | {"MS"}


def gate_arity(name: str, n_qubits: int | None = None) -> int:
    """Number of wires a named gate acts on."""
    if name == "MS":
        if n_qubits is None:
            raise QNumError("MS needs an explicit qubit count")
        return n_qubits
    if name in _PARAM:
        return 1
    if name not in _FIXED:
        raise QNumError(f"unknown gate {name!r}")
    return _FIXED[name].shape[0].bit_length() - 1


def gate_param_count(name: str) -> int:
    if name in _PARAM or name == "MS":
        return 1
    if name in _FIXED:
        return 0
    raise QNumError(f"unknown gate {name!r}")


def gate_matrix(
    name: str,
    params: Sequence[float] = (),
    *,
    dagger: bool = False,
    n_qubits: int | None = None,
) -> np.ndarray:
    """Matrix of a named gate; ``dagger`` returns its adjoint.

    ``MS`` needs ``n_qubits`` (the number of wires it spans).
    """
    params = list(params)
    expected = gate_param_count(name)
    if len(params) != expected:
        raise QNumError(f"gate {name} takes {expected} parameter(s), got {len(params)}")
    if name == "MS":
        if n_qubits is None:
            raise QNumError("MS needs an explicit qubit count")
        m = ms_gate(n_qubits, params[0])
    elif name in _PARAM:
        m = _PARAM[name](float(params[0]))
    else:
        m = _FIXED[name].copy()
    return m.conj().T if dagger else m


def ms_gate(n: int, theta: float) -> np.ndarray:
    """Mølmer–Sørensen gate exp(i·theta·(Σ X_i)²/4) on ``n`` qubits.

    In the Hadamard-conjugated basis Σ X_i is diagonal with eigenvalue
    n - 2·popcount(b) on basis state b, so the exponential is exact.
    """
    if n < 1:
        raise QNumError("MS needs at least one qubit")
    check_width(n, 6)
    dim = 1 << n
    weights = np.array([bin(b).count("1") for b in range(dim)])
    eig = (n - 2 * weights).astype(float)
    diag = np.exp(1j * theta * eig**2 / 4)
    hn = hadamard_tower(n)
    return hn @ (diag[:, None] * hn)


def hadamard_tower(n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, _FIXED["H"])
    return out


# -- products and embeddings -------------------------------------------------

def kron(a, b, max_qubits: int | None = None):
    """Kronecker product; the left operand holds the high-order bits."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        check_width(a.n_qubits + b.n_qubits, max_qubits)
        return StateVector(np.kron(a.amps, b.amps))
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise QNumError("non-finite operand")
    n = (a.shape[0] * b.shape[0]).bit_length() - 1
    check_width(n, max_qubits)
    return np.kron(a, b)


def is_unitary(u: np.ndarray, tol: float = NORM_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])) <= tol)


def controlled(u: np.ndarray, polarity: str = "positive") -> np.ndarray:
    """Block-diagonal controlled gate with the control on the high bit."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise QNumError("controlled() needs a unitary operand")
    d = u.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    eye = np.eye(d, dtype=complex)
    if polarity in ("positive", "pos", True):
        out[:d, :d], out[d:, d:] = eye, u
    elif polarity in ("negative", "neg", False):
        out[:d, :d], out[d:, d:] = u, eye
    else:
        raise QNumError(f"unknown polarity {polarity!r}")
    return out


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise QNumError(f"duplicate target wires {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise QNumError(f"target wire {t} out of range for {n} qubits")
    return targets


def apply_array(amps: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Unchecked core of :func:`apply` on a raw amplitude array."""
    k = len(targets)
    psi = amps.reshape([2] * n) if n else amps.reshape(())
    gate = u.reshape([2] * (2 * k))
    # contract the gate's input axes with the target axes, then restore order
    psi = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), list(targets)))
    rest = [w for w in range(n) if w not in targets]
    order = list(targets) + rest
    psi = np.moveaxis(psi, list(range(n)), order)
    return psi.reshape(-1)


def apply(state: StateVector, u: np.ndarray, targets: Sequence[int]) -> StateVector:
    """Apply ``u`` to the listed wires of ``state`` (first target = high bit of ``u``)."""
    n = state.n_qubits
    targets = _check_targets(targets, n)
    u = np.asarray(u, dtype=complex)
    if u.shape != (1 << len(targets), 1 << len(targets)):
        raise QNumError(f"gate of shape {u.shape} does not act on {len(targets)} wire(s)")
    return StateVector(apply_array(state.amps, u, targets, n))


def embed(u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full 2^n matrix of ``u`` acting on ``targets`` (identity elsewhere)."""
    targets = _check_targets(targets, n)
    check_width(n)
    dim = 1 << n
    cols = np.eye(dim, dtype=complex)
    out = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        out[:, j] = apply_array(cols[:, j], u, targets, n)
    return out


# -- measurement -----------------------------------------------------------

def outcome_probabilities(state: StateVector, wire: int) -> tuple[float, float]:
    n = state.n_qubits
    _check_targets([wire], n)
    probs = state.probabilities().reshape([2] * n)
    p0 = float(np.take(probs, 0, axis=wire).sum())
    p1 = float(np.take(probs, 1, axis=wire).sum())
    return p0, p1


def project(state: StateVector, wire: int, bit: int, *, remove: bool = False) -> StateVector:
    """Renormalized projection of ``state`` onto ``wire = bit``."""
    n = state.n_qubits
    psi = state.amps.reshape([2] * n)
    part = np.take(psi, bit, axis=wire)
    norm = np.linalg.norm(part)
    if norm**2 < MIN_BRANCH_PROB:
        raise QNumError(f"projection onto wire {wire} = {bit} has negligible weight")
    part = part / norm
    if remove:
        return StateVector(part.reshape(-1))
    full = np.zeros_like(psi)
    idx = [slice(None)] * n
    idx[wire] = bit
    full[tuple(idx)] = part
    return StateVector(full.reshape(-1))


def measure(state: StateVector, wire: int, rng: np.random.Generator, *, remove: bool = False):
    """Measure ``wire`` in the computational basis.

    Returns ``(bit, post_state, probability)`` where probability is the
    pre-draw probability of the returned outcome. Outcomes with probability
    below ``MIN_BRANCH_PROB`` are never drawn. With ``remove=True`` the
    measured wire is dropped from the returned state.
    """
    p0, p1 = outcome_probabilities(state, wire)
    if p0 < MIN_BRANCH_PROB:
        bit = 1
    elif p1 < MIN_BRANCH_PROB:
        bit = 0
    else:
        bit = 0 if rng.random() < p0 / (p0 + p1) else 1
    prob = p0 if bit == 0 else p1
    return bit, project(state, wire, bit, remove=remove), prob


# -- Householder reflections -------------------------------------------------

@dataclass(frozen=True, eq=False)
class HouseholderFactor:
    """The reflection ``I - a·|u><u|``; ``a = 0`` or ``u = 0`` is the identity."""

    a: complex
    u: np.ndarray
    pivot: int = 0

    @property
    def dim(self) -> int:
        return self.u.size

    def is_identity(self) -> bool:
        return self.a == 0 or not np.any(self.u)

    def matrix(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex) - self.a * np.outer(self.u, self.u.conj())

    def apply(self, v: np.ndarray) -> np.ndarray:
        """F·v for a vector or a matrix of columns, without forming F."""
        v = np.asarray(v, dtype=complex)
        if self.is_identity():
            return v.copy()
        return v - self.a * np.outer(self.u, self.u.conj() @ v).reshape(v.shape)


def householder_factor(col: np.ndarray, pivot: int, tol: float = 1e-14) -> HouseholderFactor:
    """Reflection sending ``col`` to a multiple of ``e_pivot``.

    Only entries from ``pivot`` on are touched; entries above stay put. The
    reflector is Hermitian, hence its own inverse.
    """
    col = np.asarray(col, dtype=complex).reshape(-1)
    dim = col.size
    if not 0 <= pivot < dim:
        raise QNumError(f"pivot {pivot} out of range for dimension {dim}")
    x = col[pivot:]
    xnorm = np.linalg.norm(x)
    if xnorm <= tol:
        raise QNumError("active suffix of the column is zero")
    u = np.zeros(dim, dtype=complex)
    if np.linalg.norm(x[1:]) <= tol:
        return HouseholderFactor(0j, u, pivot)
    x0 = x[0]
    phase = x0 / abs(x0) if abs(x0) > tol else 1.0
    # subtracting -phase·|x| from x0 avoids cancellation
    alpha = -phase * xnorm
    v = x.copy()
    v[0] -= alpha
    u[pivot:] = v
    a = 2.0 / np.vdot(v, v).real
    return HouseholderFactor(complex(a), u, pivot)


# -- comparisons ---------------------------------------------------------------

def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over φ of ||a - e^{iφ} b||_F."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise QNumError(f"shape mismatch {a.shape} vs {b.shape}")
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def equal_up_to_phase(a, b, tol: float = EQ_TOL) -> bool:
    if isinstance(a, StateVector):
        a = a.amps
    if isinstance(b, StateVector):
        b = b.amps
    return phase_distance(a, b) <= tol


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector(v / np.linalg.norm(v))


# -- matrix text format ----------------------------------------------------------

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_TOKEN = re.compile(
    rf"^(?:(?P<re>[+-]?{_NUM})(?P<im>[+-](?:{_NUM})?[ij])?|(?P<pure>[+-]?(?:{_NUM})?[ij]))$"
)


def _imag(body: str) -> float:
    body = body[:-1]
    if body in ("", "+"):
        return 1.0
    if body == "-":
        return -1.0
    return float(body)


def parse_complex(token: str) -> complex:
    """Parse ``a+bi``, ``a``, ``bi``, ``-bi``, ``i`` (``j`` accepted too)."""
    m = _COMPLEX_TOKEN.match(token.strip())
    if not m:
        raise QNumError(f"bad complex token {token!r}")
    if m.group("pure"):
        return complex(0.0, _imag(m.group("pure")))
    return complex(float(m.group("re")), _imag(m.group("im")) if m.group("im") else 0.0)


def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def parse_matrix_text(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise QNumError("empty matrix text")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "dim":
        raise QNumError("matrix text must start with 'dim N'")
    try:
        dim = int(head[1])
    except ValueError:
        raise QNumError(f"bad dimension {head[1]!r}") from None
    rows = lines[1:]
    if len(rows) != dim:
        raise QNumError(f"expected {dim} rows, found {len(rows)}")
    out = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        toks = row.split()
        if len(toks) != dim:
            raise QNumError(f"row {i + 1} has {len(toks)} entries, expected {dim}")
        out[i] = [parse_complex(t) for t in toks]
    return out


def format_matrix_text(m: np.ndarray) -> str:
    m = np.asarray(m, dtype=complex)
    lines = [f"dim {m.shape[0]}"]
    lines += [" ".join(format_complex(z) for z in row) for row in m]
    return "\n".join(lines) + "\n"

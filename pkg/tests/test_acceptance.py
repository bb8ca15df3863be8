"""Acceptance criteria 1 to 10, one PASS/FAIL line each."""
import json
import subprocess
import sys
import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from acceptance_log import criterion
from corpus import CNOT_DUP, QUBIT_THUNK, NEGATIVE_TERMS, ORACLE_TERMS, random_pathsum_circuit
from qlang import circuit as C
from qlang import isolang as I
from qlang import oracle, pathsum, qnum, usynth
from qlang.qlc import (
    Bang, Lolli, Program, QBit, QTypeError, UnitT, check, parse, pretty, run_term, step_traced, typecheck,
)
from qlang.qlc.gen import random_program


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


def test_c1_type_discipline():
    with criterion(1, "type discipline", limit=1.0) as notes:
        assert typecheck(parse(QUBIT_THUNK)) == Bang(Lolli(UnitT(), QBit()))
        assert len(NEGATIVE_TERMS) >= 20
        false_accepts = []
        for src, _ in [(CNOT_DUP, "")] + NEGATIVE_TERMS:
            try:
                typecheck(parse(src))
                false_accepts.append(src)
            except QTypeError:
                pass
        notes.append(f"{len(NEGATIVE_TERMS) + 1} rejected terms")
        assert not false_accepts, f"accepted: {false_accepts}"


def test_c2_operational_fuzz():
    with criterion(2, "operational safety fuzz", limit=120.0) as notes:
        rng = philox(2024)
        finished = truncated = steps = 0
        for _ in range(10_000):
            term = random_program(rng, max_qubits=6, max_depth=3)
            ty = typecheck(term)
            p = Program.initial(term)
            for _ in range(60):
                if p.M.is_value:
                    break
                p, ts = step_traced(p, rng, 6)
                steps += 1
                assert abs(ts.mass - 1) <= 1e-12, f"branch mass {ts.mass}"
                check(p.M, {x: QBit() for x in p.L}, expected=ty)
                assert len(p.L) <= 6
            if p.M.is_value:
                finished += 1
            else:
                truncated += 1
        notes.append(f"{finished} reached a value, {truncated} stopped at 60 steps, {steps} steps checked")


def test_c3_coin():
    with criterion(3, "coin statistics") as notes:
        term = check(parse("meas (H (qinit ff))")).term
        rng = philox(7)
        tt = sum(pretty(run_term(term, rng).value) == "tt" for _ in range(10_000))
        freq = tt / 10_000
        notes.append(f"tt frequency {freq:.4f}")
        assert abs(freq - 0.5) <= 0.015


def test_c4_oracles():
    with criterion(4, "oracle coincidence", limit=60.0) as notes:
        assert len(ORACLE_TERMS) == 30
        checked = 0
        for src, inputs in ORACLE_TERMS:
            assert len(inputs) <= 8
            term = oracle.parse_bool(src)
            c = oracle.bennett_wrap(oracle.synth_landauer(term, inputs))
            r = oracle.verify_oracle(c, term, len(inputs), inputs)
            assert r.ok, f"{src}: {r.counterexample}"
            checked += r.checked
        notes.append(f"30 terms, {checked} basis inputs")


def test_c5_householder():
    with criterion(5, "Householder synthesis", limit=120.0) as notes:
        rng = philox(5)
        for n in (2, 3, 4):
            worst = recon = 0.0
            cnots = 0
            for _ in range(50):
                u = qnum.random_unitary(1 << n, rng)
                recon = max(recon, np.linalg.norm(usynth.householder_qr(u).reconstruct() - u))
                c, counts = usynth.synth_householder(u)
                worst = max(worst, qnum.phase_distance(C.to_unitary(c), u))
                cnots = max(cnots, counts["cnot"])
            notes.append(f"n={n}: err {worst:.1e}, recon {recon:.1e}, cnot {cnots}/{2.5 * 4**n:g}")
            assert worst <= 1e-6 and recon <= 1e-8 and cnots <= 2.5 * 4**n


def test_c6_ms_bound():
    with criterion(6, "MS-layer bound"):
        for n in range(1, 21):
            closed = math.ceil(Fraction(2 ** (n + 1) - 2 * n - 2, 2 * n + 1))
            assert usynth.ms_layer_lower_bound(n) == closed, n
        assert [usynth.ms_layer_lower_bound(n) for n in (2, 3, 4)] == [1, 2, 3]


def test_c7_bfgs():
    with criterion(7, "BFGS ion synthesis", limit=180.0) as notes:
        rng = philox(21)
        hits = 0
        for _ in range(10):
            th = rng.uniform(0, 2 * np.pi, usynth.param_count(2, 2))
            target = usynth.ansatz_eval(usynth.IonAnsatz(2, 2, th))
            res = usynth.bfgs_synth(target, 2, rng, budget=2000, restarts=1)
            hits += res.error <= 1e-6 and res.iterations <= 2000
        notes.append(f"planted {hits}/10")
        assert hits >= 9

        trng = philox(100)
        targets = []
        for _ in range(10):
            u = qnum.random_unitary(4, trng)
            targets.append(u / np.linalg.det(u) ** 0.25)
        means = []
        for layers in (1, 2, 3, 4):
            errs = [usynth.bfgs_synth(u, layers, philox(1000 + k)).error for k, u in enumerate(targets)]
            means.append(float(np.mean(errs)))
        notes.append("mean error by layers " + ", ".join(f"{m:.3f}" for m in means))
        assert all(a > b for a, b in zip(means, means[1:]))


def test_c8_pathsum():
    with criterion(8, "path-sum oracle agreement", limit=60.0) as notes:
        rng = philox(8)
        worst = 0.0
        for _ in range(300):
            c = random_pathsum_circuit(rng, max_qubits=5, max_gates=30)
            worst = max(worst, np.linalg.norm(pathsum.to_matrix(pathsum.circuit_pathsum(c)) - C.to_unitary(c)))
        notes.append(f"worst Frobenius gap {worst:.1e}")
        assert worst <= 1e-9

        def one(*names):
            return C.Circuit.from_gates(1, [C.gate(g, 0) for g in names])

        assert pathsum.equiv(one("H", "H"), C.Circuit.identity(1)).equivalent
        assert pathsum.equiv(one("T", "T"), one("S")).equivalent
        for n in range(1, 11):
            m = pathsum.to_matrix(pathsum.circuit_pathsum(one(*["H"] * n)))
            assert np.allclose(m, np.eye(2) if n % 2 == 0 else qnum.gate_matrix("H"), atol=1e-10), n


CLASSICAL_ISOS = """
iso swapb : bool * bool <-> bool * bool {
  | <x, y> <-> <y, x>
}
iso omegab : bool * (bool + 1) <-> bool * bool + bool * 1 {
  | <x, inl y> <-> inl <x, y>
  | <x, inr y> <-> inr <x, y>
}
iso toffoli : bool * (bool * bool) <-> bool * (bool * bool) {
  | <ff, p> <-> <ff, p>
  | <tt, p> <-> <tt, cnot p>
}
iso rot3 : bool * (bool * bool) <-> bool * (bool * bool) {
  | <x, <y, z>> <-> <z, <x, y>>
}
iso inc : bool * bool <-> bool * bool {
  | <ff, ff> <-> <ff, tt>
  | <ff, tt> <-> <tt, ff>
  | <tt, ff> <-> <tt, tt>
  | <tt, tt> <-> <ff, ff>
}
iso mirror : (1 + bool) + bool <-> bool + (bool + 1) {
  | inl inl () <-> inr inr ()
  | inl inr b <-> inr inl b
  | inr b <-> inl not b
}
iso fredkin : bool * (bool * bool) <-> bool * (bool * bool) {
  | <ff, p> <-> <ff, p>
  | <tt, p> <-> <tt, swap p>
}
iso quad : (bool * bool) * (bool * bool) <-> (bool * bool) * (bool * bool) {
  | <a, b> <-> <cnot b, inc a>
}
"""
CLASSICAL_NAMES = ["not", "cnot", "swapb", "omegab", "toffoli", "rot3", "inc", "mirror", "fredkin", "quad"]
GATES = {"x": "X", "z": "Z", "had": "H", "t": "T"}


def test_c9_isos():
    with criterion(9, "iso suite", limit=30.0) as notes:
        mod = I.load(CLASSICAL_ISOS)
        assert np.linalg.norm(I.to_matrix(mod.iso("had")) - qnum.gate_matrix("H")) <= 1e-12
        for (u, ug), (v, vg) in product(GATES.items(), repeat=2):
            m = I.to_matrix(mod.iso(f"switch[{u}, {v}]"))
            U, V = qnum.gate_matrix(ug), qnum.gate_matrix(vg)
            z = np.zeros((2, 2))
            assert np.allclose(m, np.block([[V @ U, z], [z, U @ V]]), atol=1e-12), (u, v)

        for name in CLASSICAL_NAMES:
            f = mod.iso(name)
            r = I.check_iso(f)
            assert r.ok and not r.quantum, (name, r.errors)
            dom, cod = f.type
            xs, ys = I.enumerate_values(dom), I.enumerate_values(cod)
            assert len(xs) <= 16 and len(xs) == len(ys)
            images = [I.apply(f, x) for x in xs]
            assert sorted(images, key=I.value_key) == ys, name
            inv = I.invert(f)
            assert all(I.apply(inv, y) == x for x, y in zip(xs, images)), name
        notes.append(f"{len(CLASSICAL_NAMES)} classical isos, 16 switch pairs")

        def direct_map(g, items):
            return [] if not items else [I.apply(g, items[0])] + direct_map(g, items[1:])

        lists = 0
        for gname, elems in [("not", [I.FF, I.TT]), ("id", [I.FF, I.TT]),
                             ("cnot", I.enumerate_values(I.parse_type("bool * bool", mod.program.types)))]:
            g, m = mod.iso(gname), mod.iso(f"map[{gname}]")
            for length in range(6):
                for items in product(elems, repeat=length):
                    out = I.apply(m, I.from_list(list(items)))
                    assert I.to_list(out) == direct_map(g, list(items))
                    lists += 1
        notes.append(f"map checked on {lists} lists")


CLI_RUNS = [
    ["qlc", "run", "{data}/coin.q", "--seed", "7", "--shots", "10000"],
    ["oracle", "synth", "{data}/or.b", "--inputs", "x,y", "--landauer"],
    ["usynth", "householder", "{data}/u2.mat"],
    ["usynth", "ion", "{data}/u2.mat", "--layers", "2", "--seed", "3", "--restarts", "2", "--budget", "300"],
    ["usynth", "bound", "--n", "7"],
    ["iso", "matrix", "{data}/circuits.iso", "--iso", "main"],
    ["iso", "run", "{data}/circuits.iso", "--iso", "notall", "--value", "ff :: tt :: nil"],
]


def test_c10_determinism(data_dir):
    with criterion(10, "JSON determinism") as notes:
        for argv in CLI_RUNS:
            argv = [a.format(data=data_dir) for a in argv] + ["--json"]
            outs = [subprocess.run([sys.executable, "-m", "qlang", *argv], capture_output=True).stdout
                    for _ in range(2)]
            assert outs[0] == outs[1], argv
            json.loads(outs[0])
        notes.append(f"{len(CLI_RUNS)} commands run twice in fresh processes")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))

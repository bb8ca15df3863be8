"""Shared term corpora for the module and acceptance tests."""
import numpy as np

from qlang import qnum
from qlang.circuit import Circuit, gate

# Ill-typed quantum lambda terms, each with the discipline it breaks.
NEGATIVE_TERMS = [
    ("fun x -> CNOT (x, x)", "qubit used twice"),
    ("let q = qinit ff in ()", "qubit discarded"),
    ("let q = qinit ff in (q, q)", "qubit duplicated"),
    ("fun q -> let (a, b) = CNOT (q, q) in a", "reuse and discard"),
    ("meas (meas (qinit ff))", "meas on a bit"),
    ("H ff", "gate on a bit"),
    ("qinit (qinit ff)", "qinit on a qubit"),
    ("if qinit tt then ff else tt", "qubit as condition"),
    ("let q = qinit ff in let f = fun x -> CNOT (q, x) in (f (qinit ff), f (qinit tt))",
     "duplicated closure over a qubit"),
    ("(fun x -> x) (qinit ff) (qinit ff)", "qubit applied as a function"),
    ("let (a, b) = qinit ff in a", "qubit destructured as a pair"),
    ("let () = qinit ff in tt", "qubit destructured as unit"),
    ("tt ff", "bit applied as a function"),
    ("if tt then qinit ff else ff", "branch types differ"),
    ("let rec f x = f in f", "infinite type"),
    ("let q = qinit ff in let rec f x = CNOT (q, x) in f (qinit ff)", "recursive closure over a qubit"),
    ("unbox (fun x -> H x)", "unbox of a function"),
    ("let q = qinit ff in box (fun x -> CNOT (q, x))", "boxing a closure over a qubit"),
    ("(fun f -> (f tt, f ff)) (let q = qinit ff in fun b -> CNOT (q, qinit b))",
     "promotion of a closure over a qubit"),
    ("CNOT (qinit ff)", "arity mismatch"),
    ("meas ()", "meas on unit"),
    ("RZ[0.5] (qinit ff, qinit ff)", "unary gate on a pair"),
    ("let f = (fun y -> fun u -> let () = u in y) tt in (f (), f ())", "promotion of a non-value"),
]

QUBIT_THUNK = "fun x -> let () = x in H (qinit ff)"
CNOT_DUP = "fun x -> (CNOT x) x"

# Well-typed terms that exercise duplication, branching, recursion and boxing.
POSITIVE_TERMS = [
    ("fun f -> (f (qinit ff), f (qinit ff))", "!(!(qbit -o 'a) -o 'a * 'a)"),
    ("let q = qinit ff in if meas (H (qinit ff)) then q else X q", "qbit"),
    ("fun x -> ()", "!(!('a -o 'b) -o 1)"),
    ("let rec f x = if x then ff else f tt in f tt", "bit"),
    ("unbox (box (fun x -> H x))", "!(qbit -o qbit)"),
    ("let g = unbox (box (fun x -> H x)) in (g (qinit ff), g (qinit tt))", "qbit * qbit"),
    ("fun x -> let (a, b) = x in a", "!('a * !('b -o 'c) -o 'a)"),
    ("meas (H (qinit ff))", "bit"),
]

# Boolean oracle terms: (source, input order). Every input is used.
ORACLE_TERMS = [
    ("(fun f -> f (and (f x) (f y))) not", ["x", "y"]),
    ("and x y", ["x", "y"]),
    ("not x", ["x"]),
    ("x", ["x"]),
    ("and x (not x)", ["x"]),
    ("not (and (not x) (not y))", ["x", "y"]),
    ("(x, y)", ["x", "y"]),
    ("(y, x)", ["x", "y"]),
    ("(and x y, not (and x y))", ["x", "y"]),
    ("and (and x y) z", ["x", "y", "z"]),
    ("if x then y else z", ["x", "y", "z"]),
    ("if x then not y else y", ["x", "y"]),
    ("let xor = fun a -> fun b -> if a then not b else b in xor x y", ["x", "y"]),
    ("let xor = fun a -> fun b -> if a then not b else b in xor (xor x y) z", ["x", "y", "z"]),
    ("let maj = fun a -> fun b -> fun c -> if a then (if b then tt else c) else (if b then c else ff) "
     "in maj x y z", ["x", "y", "z"]),
    ("let or = fun a -> fun b -> not (and (not a) (not b)) in or (or x y) (or z w)", ["w", "x", "y", "z"]),
    ("let or = fun a -> fun b -> not (and (not a) (not b)) in (and x y, or x y)", ["x", "y"]),
    ("let twice = fun f -> fun a -> f (f a) in twice not x", ["x"]),
    ("let xor = fun a -> fun b -> if a then not b else b in "
     "let add = fun a -> fun b -> fun c -> (xor (xor a b) c, if a then (if b then tt else c) else "
     "(if b then c else ff)) in add x y z", ["x", "y", "z"]),
    ("and (and (and a b) (and c d)) (and (and e f) (and g h))", list("abcdefgh")),
    ("let xor = fun p -> fun q -> if p then not q else q in "
     "xor (xor (xor a b) (xor c d)) (xor (xor e f) (xor g h))", list("abcdefgh")),
    ("if a then (if b then c else d) else (if e then f else g)", list("abcdefg")),
    ("(fun p -> let (u, v) = p in and u v) (x, y)", ["x", "y"]),
    ("let swap = fun p -> let (u, v) = p in (v, u) in swap (x, not y)", ["x", "y"]),
    ("let rec par b = if b then ff else tt in par (and x y)", ["x", "y"]),
    ("and tt x", ["x"]),
    ("(and ff x, not ff)", ["x"]),
    ("let eq = fun a -> fun b -> if a then b else not b in (eq x y, eq y z, eq x z)", ["x", "y", "z"]),
    ("let mux = fun s -> fun a -> fun b -> if s then a else b in mux s (and a b) (not c)",
     ["a", "b", "c", "s"]),
    ("let nand = fun a -> fun b -> not (and a b) in nand (nand x (nand x y)) (nand y (nand x y))",
     ["x", "y"]),
]


PATHSUM_GATES = ("I", "X", "Z", "S", "T", "RZ", "CNOT", "SWAP", "TOFFOLI", "H")


def random_pathsum_circuit(rng, max_qubits: int = 5, max_gates: int = 30) -> Circuit:
    """Random pure circuit over the gates with an exact path-sum form."""
    n = int(rng.integers(1, max_qubits + 1))
    ops = []
    for _ in range(int(rng.integers(0, max_gates + 1))):
        name = str(rng.choice(PATHSUM_GATES))
        arity = qnum.gate_arity(name)
        if arity > n:
            continue
        wires = [int(w) for w in rng.permutation(n)[:arity]]
        params = ()
        if name == "RZ":
            m = int(rng.integers(0, 5))
            params = (2 * np.pi * int(rng.integers(0, 1 << m)) / (1 << m),)
        dagger = name in ("S", "T") and bool(rng.integers(0, 2))
        ops.append(gate(name, *wires, params=params, dagger=dagger))
    return Circuit.from_gates(n, ops)

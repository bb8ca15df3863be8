"""Compile classical boolean programs into clean reversible oracles."""
from qlang import circuit as C
from qlang import oracle

SRC = "(fun f -> f (and (f x) (f y))) not"

print("Source:", SRC)
term = oracle.parse_bool(SRC)
print("Truth table (x, y -> f):")
table = oracle.truth_table(term, ["x", "y"])
for x in (0, 1):
    for y in (0, 1):
        print(f"  {x} {y} -> {table((x, y))[0]}")

lan = oracle.synth_landauer(term, ["x", "y"])
print("\nGarbage-producing embedding:")
print("  gates:", C.gate_count(lan.circuit)["gates"], " ancillas:", len(lan.ancillas), " garbage wires:", lan.garbage)

clean = oracle.bennett_wrap(lan)
print("\nAfter compute / copy / uncompute:")
print("  gates:", C.gate_count(clean)["gates"])
res = oracle.verify_oracle(clean, term, 2, ["x", "y"])
print(f"  verify on all {res.checked} basis inputs:", "ok" if res.ok else res.counterexample)
print("\nA wrong circuit is caught with a counterexample:")
bad = oracle.verify_oracle(C.Circuit.identity(3), term, 2, ["x", "y"])
print("  ", bad.counterexample)

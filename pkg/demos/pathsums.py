"""Sum-over-paths view of small circuits and equivalence checking."""
import numpy as np

from qlang import circuit as C
from qlang import pathsum as P


def line(*names):
    return C.Circuit.from_gates(1, [C.gate(g, 0) for g in names])


print("Single gates:")
for g in ("H", "T", "X"):
    print(f"  {g}: {P.gate_pathsum(g)}")

bell = C.Circuit.from_gates(2, [C.gate("H", 0), C.gate("CNOT", 0, 1)])
print("\nBell preparation [H; CNOT]:")
print(" ", P.circuit_pathsum(bell))

print("\nHadamard towers: even length acts as identity, odd as H.")
for n in range(1, 6):
    ps = P.circuit_pathsum(line(*["H"] * n))
    print(f"  H^{n}: {len(ps.path_vars)} path variable(s), identity: {np.allclose(P.to_matrix(ps), np.eye(2))}")

print("\nEquivalence checks:")
for a, b, label in [(line("H", "H"), C.Circuit.identity(1), "H;H vs id"),
                    (line("T", "T"), line("S"), "T;T vs S"),
                    (line("H", "T", "H"), line("T"), "H;T;H vs T")]:
    print(f"  {label}: {P.equiv(a, b)}")

"""Reversible pattern-matching isos: classical bijections and their quantum extension."""
import numpy as np

from qlang import isolang as I

mod = I.load("""
iso ch : bool * bool <-> bool * bool {
  | <ff, y> <-> <ff, y>
  | <tt, y> <-> <tt, had y>
}
""")

print("Distributivity of pairs over sums:")
om = mod.iso("omega")
print(" ", I.check_iso(mod.generic("omega")))
v = I.parse_expr("<ff, inl tt>")
w = I.apply(om, v)
print(f"  omega {I.show(v)} = {I.show(w)};  inverse gives back {I.show(I.apply(I.invert(om), w))}")

print("\nmap over a list, written with a structural fixpoint:")
lst = I.from_list([I.TT, I.FF, I.FF])
print(f"  map[not] {I.show(lst)} = {I.show(I.apply(mod.iso('map[not]'), lst))}")

print("\nAmplitudes: had sends ff to a superposition and back.")
had = mod.iso("had")
plus = I.apply_quantum(had, I.FF)
print(f"  had ff = {plus}")
print(f"  had ({plus}) = {I.apply_quantum(had, plus)}")

print("\nMatrices of closed isos:")
print("  ch:\n", np.round(I.to_matrix(mod.iso("ch")).real, 3))
r = I.check_iso(mod.iso("switch[x, z]"))
print(f"  switch[x, z] checks {'ok' if r.ok else r.errors}; its matrix:")
print(np.round(I.to_matrix(mod.iso("switch[x, z]")).real, 3))

"""Type-check and run quantum lambda terms, then box a function into a circuit."""
import numpy as np

from qlang import circuit as C
from qlang.qlc import QTypeError, check, parse, pretty, run_term, typecheck

rng = np.random.Generator(np.random.Philox(0))

print("A fair coin: measure a fresh qubit after a Hadamard.")
coin = check(parse("meas (H (qinit ff))"))
print("  type:", coin.type)
counts = {"tt": 0, "ff": 0}
for _ in range(2000):
    counts[pretty(run_term(coin.term, rng).value)] += 1
print("  2000 shots:", counts)

print("\nA thunk that builds a qubit can be duplicated; the qubit itself cannot.")
print("  fun x -> let () = x in H (qinit ff) :", typecheck(parse("fun x -> let () = x in H (qinit ff)")))
for src in ["fun x -> CNOT (x, x)", "let q = qinit ff in (q, q)", "let q = qinit ff in ()"]:
    try:
        typecheck(parse(src))
    except QTypeError as e:
        print(f"  rejected {src!r}: {e}")

print("\nBell pair: both measurements always agree.")
bell = check(parse("let (a, b) = CNOT (H (qinit ff), qinit ff) in (meas a, meas b)"))
seen = {pretty(run_term(bell.term, rng).value) for _ in range(200)}
print("  outcomes seen:", sorted(seen))

print("\nBoxing turns a function on qubits into a circuit value.")
src = "box (fun w -> let (x, y) = w in CNOT (x, H y))"
boxed = run_term(check(parse(src)).term, rng).value
circ = boxed.circuit
print("  gates:", C.gate_count(circ)["gates"])
print("  unitary (real part):")
print(np.round(C.to_unitary(circ).real, 3))

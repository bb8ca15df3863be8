"""Two routes to a gate sequence for a target unitary."""
import numpy as np

from qlang import circuit as C
from qlang import qnum, usynth

rng = np.random.Generator(np.random.Philox(3))

print("Householder route: exact, CNOT + single-qubit rotations.")
for n in (1, 2, 3):
    u = qnum.random_unitary(1 << n, rng)
    c, counts = usynth.synth_householder(u)
    err = qnum.phase_distance(C.to_unitary(c), u)
    print(f"  n={n}: {counts['cnot']:4d} CNOT, {counts['rotations']:4d} rotations, error {err:.1e}"
          f"  (CNOT budget {2.5 * 4**n:g})")

print("\nTrapped-ion route: fit global Molmer-Sorensen layers with BFGS.")
print("  layer lower bound for n = 2..6:", [usynth.ms_layer_lower_bound(n) for n in range(2, 7)])
target = qnum.random_unitary(4, rng)
for layers in (1, 2, 3, 4):
    res = usynth.bfgs_synth(target, layers, np.random.Generator(np.random.Philox(layers)), restarts=3)
    print(f"  {layers} layer(s): error {res.error:.3f} after {res.iterations} iterations")

print("\nA planted target is recovered exactly.")
theta = rng.uniform(0, 2 * np.pi, usynth.param_count(2, 2))
planted = usynth.ansatz_eval(usynth.IonAnsatz(2, 2, theta))
res = usynth.bfgs_synth(planted, 2, rng, restarts=1)
print(f"  error {res.error:.1e}, converged: {res.converged}")
print("  gate list:", C.gate_count(usynth.IonAnsatz(2, 2, res.theta).to_circuit())["gates"])

import numpy as np
import pytest

from qlang import isolang as I
from qlang import qnum
from qlang.isolang import FF, NIL, STAR, TT, Inl, Inr, Pair

GATE_ISOS = {"x": "X", "z": "Z", "had": "H", "t": "T"}

EXTRA = """
iso partial : a + b <-> a + b {
  | inl x <-> inl x
}
iso dup : a <-> a * a {
  | x <-> <x, x>
}
iso loop : bool <-> bool fix f {
  | x <-> f x
}
iso omega2 : bool * (1 + 1) <-> bool * 1 + bool * 1 {
  | <x, inl y> <-> inl <x, y>
  | <x, inr y> <-> inr <x, y>
}
iso flip2 : bool * bool <-> bool * bool {
  | <x, y> <-> <not y, x>
}
iso both : bool <-> bool {
  | ff <-> (sqrt(2)/2) * (ff + tt)
  | tt <-> (sqrt(2)/2) * (ff + tt)
}
"""


@pytest.fixture(scope="module")
def mod():
    return I.load(EXTRA)


def bool_type(mod, src="bool"):
    return I.parse_type(src, mod.program.types)


class TestSyntax:
    def test_round_trip_values(self):
        for src in ["()", "<ff, tt>", "inl tt", "ff :: tt :: nil"]:
            assert I.show(I.parse_expr(src)) == src

    def test_list_encoding(self):
        v = I.from_list([TT, FF])
        assert I.to_list(v) == [TT, FF]
        assert I.to_list(NIL) == []
        assert FF == Inl(STAR) and TT == Inr(STAR)

    def test_error_position(self):
        with pytest.raises(I.IsoSyntaxError) as e:
            I.parse_program("iso f : bool <-> bool {\n  | ff <-> \n}")
        assert e.value.line == 3 and e.value.col >= 1

    def test_error_position_after_prelude(self):
        with pytest.raises(I.IsoSyntaxError) as e:
            I.load("\niso f : bool <-> bool {\n  | ff <-> \n}")
        assert e.value.line == 4

    def test_bad_type(self):
        with pytest.raises(I.IsoSyntaxError):
            I.parse_type("bool +")

    def test_unknown_iso(self, mod):
        with pytest.raises(I.IsoError):
            mod.iso("nope")


class TestCheck:
    def test_omega_accepted(self, mod):
        r = I.check_iso(mod.generic("omega"))
        assert r.ok and r.type == "a * (b + c) <-> a * b + a * c"

    def test_partial_rejected(self, mod):
        r = I.check_iso(mod.generic("partial"))
        assert not r.ok and any("inr" in e for e in r.errors)

    def test_duplication_rejected(self, mod):
        r = I.check_iso(mod.generic("dup"))
        assert not r.ok and any("twice" in e for e in r.errors)

    def test_prelude_accepted(self, mod):
        for name in ["id", "not", "x", "z", "s", "t", "had", "swap", "cnot", "omega", "map", "switch"]:
            r = I.check_iso(mod.generic(name))
            assert r.ok, (name, r.errors)
            assert not r.warnings or name in ("map", "switch"), (name, r.warnings)

    def test_non_unitary_rejected(self, mod):
        r = I.check_iso(mod.iso("both"))
        assert not r.ok

    def test_quantum_flag(self, mod):
        assert I.check_iso(mod.iso("had")).quantum
        assert not I.check_iso(mod.iso("cnot")).quantum

    def test_argument_type_mismatch(self, mod):
        with pytest.raises(I.IsoTypeError):
            mod.iso("switch[cnot, x]")


class TestGuard:
    def test_map_ok(self, mod):
        assert I.structural_guard(mod.generic("map")) == []

    def test_self_call_warns(self, mod):
        assert I.structural_guard(mod.iso("loop"))

    def test_whole_pair_warns(self):
        m = I.load("""
iso whole : list(bool) <-> list(bool) fix f {
  | nil <-> nil
  | h :: t <-> f (h :: t)
}
""")
        assert any("strict sub-pattern" in w for w in I.structural_guard(m.iso("whole")))

    def test_loop_runs_out_of_fuel(self, mod):
        with pytest.raises(I.FuelExhausted):
            I.apply(mod.iso("loop"), FF, fuel=50)


class TestApply:
    def test_omega(self, mod):
        assert I.apply(mod.iso("omega"), Pair(STAR, Inr(STAR))) == Inr(Pair(STAR, STAR))

    def test_invert_omega(self, mod):
        inv = I.invert(mod.iso("omega"))
        assert I.apply(inv, Inl(Pair(TT, FF))) == Pair(TT, Inl(FF))
        assert I.invert(inv) == mod.iso("omega")

    def test_invert_identity(self, mod):
        ident = mod.iso("id")
        assert I.invert(ident).oriented() == ident.oriented()

    def test_invert_round_trip(self, mod):
        om = mod.iso("omega2")
        inv = I.invert(om)
        for v in I.enumerate_values(bool_type(mod, "bool * bool")):
            assert I.apply(inv, I.apply(om, v)) == v

    def test_invert_quantum_refused(self, mod):
        with pytest.raises(I.IsoError):
            I.invert(mod.iso("had"))

    def test_map_nil(self, mod):
        assert I.apply(mod.iso("map[not]"), NIL) == NIL

    def test_map_not(self, mod):
        out = I.apply(mod.iso("map[not]"), I.from_list([TT, FF]))
        assert I.to_list(out) == [FF, TT]

    def test_nested_application(self, mod):
        assert I.apply(mod.iso("flip2"), Pair(FF, FF)) == Pair(TT, FF)

    def test_no_match(self, mod):
        with pytest.raises(I.IsoError):
            I.apply(mod.iso("not"), STAR)

    def test_superposition_needs_apply_quantum(self, mod):
        with pytest.raises(I.IsoError):
            I.apply(mod.iso("had"), FF)


class TestQuantum:
    def test_had_ff(self, mod):
        out = I.apply_quantum(mod.iso("had"), FF)
        r = np.sqrt(2) / 2
        assert out.close_to(I.AmpValue.from_dict({FF: r, TT: r}), 1e-12)

    def test_had_cancels(self, mod):
        out = I.apply_quantum(mod.iso("had"), I.parse_expr("(sqrt(2)/2) * (ff + tt)"))
        assert out.close_to(I.AmpValue.of(FF), 1e-12)
        assert len(out.terms) == 1

    def test_identity_on_superposition(self, mod):
        av = I.AmpValue.parse(I.parse_expr("(3/5) * ff + (4/5) * i * tt"))
        assert I.apply_quantum(mod.iso("id"), av).close_to(av, 1e-12)

    def test_norm_preserved(self, mod, rng):
        it = mod.iso("switch[had, t]")
        values = I.enumerate_values(it.type[0])
        for _ in range(20):
            amps = rng.normal(size=len(values)) + 1j * rng.normal(size=len(values))
            amps /= np.linalg.norm(amps)
            out = I.apply_quantum(it, I.AmpValue.from_dict(dict(zip(values, amps))))
            assert abs(out.norm() - 1) <= 1e-9

    @pytest.mark.parametrize("name,gate", sorted(GATE_ISOS.items()))
    def test_gate_matrices(self, mod, name, gate):
        assert np.linalg.norm(I.to_matrix(mod.iso(name)) - qnum.gate_matrix(gate)) <= 1e-12

    def test_cnot_matrix(self, mod):
        assert np.allclose(I.to_matrix(mod.iso("cnot")), qnum.gate_matrix("CNOT"))

    def test_omega_matrix_is_permutation(self, mod):
        m = I.to_matrix(mod.iso("omega2"))
        assert m.shape == (4, 4) and np.allclose(m @ m.T, np.eye(4)) and set(np.unique(m)) <= {0, 1}

    def test_switch_xz(self, mod):
        m = I.to_matrix(mod.iso("switch[x, z]"))
        x, z = qnum.gate_matrix("X"), qnum.gate_matrix("Z")
        expect = np.block([[z @ x, np.zeros((2, 2))], [np.zeros((2, 2)), x @ z]])
        assert np.allclose(m, expect, atol=1e-12)

    def test_list_truncation(self, mod):
        m = I.to_matrix(mod.iso("map[had]"), depth=3)
        assert np.allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=1e-9)

    def test_open_type_refused(self, mod):
        with pytest.raises(I.IsoError):
            I.to_matrix(mod.generic("omega"))

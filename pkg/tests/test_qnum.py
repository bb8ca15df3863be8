import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlang import qnum
from qlang.qnum import StateVector

S2 = 1 / np.sqrt(2)


class TestGates:
    def test_hadamard(self):
        assert np.allclose(qnum.gate_matrix("H"), S2 * np.array([[1, 1], [1, -1]]), atol=1e-15)

    def test_rz_zero_is_identity(self):
        assert np.allclose(qnum.gate_matrix("RZ", [0.0]), np.eye(2))

    def test_cnot_permutes_high_half(self):
        cnot = qnum.gate_matrix("CNOT")
        expect = np.eye(4)[[0, 1, 3, 2]]
        assert np.array_equal(cnot, expect)

    def test_t_dagger(self):
        t = qnum.gate_matrix("T", dagger=True)
        assert np.allclose(t, np.diag([1, np.exp(-1j * np.pi / 4)]))

    def test_unknown_gate(self):
        with pytest.raises(qnum.QNumError):
            qnum.gate_matrix("FOO")

    def test_wrong_param_count(self):
        with pytest.raises(qnum.QNumError):
            qnum.gate_matrix("RX")

    @pytest.mark.parametrize("name", sorted(qnum.GATE_NAMES - {"MS"}))
    def test_all_gates_unitary(self, name):
        params = [0.37] * qnum.gate_param_count(name)
        assert qnum.is_unitary(qnum.gate_matrix(name, params))


class TestKron:
    def test_identities(self):
        assert np.array_equal(qnum.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_basis_order(self):
        s = qnum.kron(StateVector.basis("0"), StateVector.basis("1"))
        assert np.array_equal(s.amps, [0, 1, 0, 0])

    def test_h_on_high_bit(self):
        u = qnum.kron(qnum.gate_matrix("H"), np.eye(2))
        out = u @ StateVector.basis("00").amps
        assert np.allclose(out, [S2, 0, S2, 0])

    def test_width_cap(self):
        big = StateVector.basis([0] * 8)
        with pytest.raises(qnum.WidthError):
            qnum.kron(big, big, max_qubits=14)


class TestControlled:
    def test_controlled_x_is_cnot(self):
        assert np.array_equal(qnum.controlled(qnum.gate_matrix("X")), qnum.gate_matrix("CNOT"))

    def test_controlled_identity(self):
        assert np.array_equal(qnum.controlled(np.eye(2)), np.eye(4))

    def test_negative_polarity(self):
        u = qnum.controlled(qnum.gate_matrix("X"), "negative")
        assert np.array_equal(u, np.eye(4)[[1, 0, 2, 3]])

    def test_toffoli_truth_table(self):
        ccx = qnum.controlled(qnum.controlled(qnum.gate_matrix("X")))
        for x in (0, 1):
            for y in (0, 1):
                for z in (0, 1):
                    out = ccx @ StateVector.basis([x, y, z]).amps
                    assert np.array_equal(out, StateVector.basis([x, y, z ^ (x & y)]).amps)

    def test_rejects_non_unitary(self):
        with pytest.raises(qnum.QNumError):
            qnum.controlled(np.ones((2, 2)))


class TestApply:
    def test_h_then_cnot_is_bell(self):
        s = qnum.apply(StateVector.basis("00"), qnum.gate_matrix("H"), [0])
        assert np.allclose(s.amps, [S2, 0, S2, 0])
        s = qnum.apply(s, qnum.gate_matrix("CNOT"), [0, 1])
        assert np.allclose(s.amps, [S2, 0, 0, S2])

    def test_identity(self, rng):
        s = qnum.random_state(3, rng)
        assert np.allclose(qnum.apply(s, np.eye(2), [1]).amps, s.amps)

    def test_reversed_targets(self):
        s = qnum.apply(StateVector.basis("01"), qnum.gate_matrix("CNOT"), [1, 0])
        assert np.allclose(s.amps, StateVector.basis("11").amps)

    def test_bad_targets(self):
        with pytest.raises(qnum.QNumError):
            qnum.apply(StateVector.basis("00"), qnum.gate_matrix("CNOT"), [0, 0])

    def test_embed_matches_kron(self):
        h = qnum.gate_matrix("H")
        assert np.allclose(qnum.embed(h, [1], 2), np.kron(np.eye(2), h))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_apply_preserves_norm(self, seed, n):
        rng = np.random.Generator(np.random.Philox(seed))
        s = qnum.random_state(n, rng)
        k = int(rng.integers(1, n + 1))
        targets = [int(t) for t in rng.permutation(n)[:k]]
        u = qnum.random_unitary(1 << k, rng)
        out = qnum.apply(s, u, targets)
        assert abs(np.linalg.norm(out.amps) - 1) < 1e-12
        assert np.allclose(out.amps, qnum.embed(u, targets, n) @ s.amps)


class TestMeasure:
    def test_basis_state(self, rng):
        bit, post, p = qnum.measure(StateVector.basis("0"), 0, rng)
        assert (bit, p) == (0, 1.0)
        assert np.allclose(post.amps, [1, 0])

    def test_plus_state_probabilities(self):
        s = StateVector(np.array([S2, S2]))
        p0, p1 = qnum.outcome_probabilities(s, 0)
        assert p0 == pytest.approx(0.5) and p1 == pytest.approx(0.5)

    def test_bell_collapse(self, rng):
        bell = StateVector(np.array([S2, 0, 0, S2]))
        for _ in range(20):
            b, post, p = qnum.measure(bell, 0, rng)
            assert p == pytest.approx(0.5)
            assert np.allclose(post.amps, StateVector.basis([b, b]).amps)

    def test_remove_wire(self, rng):
        bell = StateVector(np.array([S2, 0, 0, S2]))
        b, post, _ = qnum.measure(bell, 0, rng, remove=True)
        assert post.n_qubits == 1
        assert np.allclose(post.amps, StateVector.basis([b]).amps)

    def test_frequency(self):
        rng = np.random.Generator(np.random.Philox(5))
        s = StateVector(np.array([S2, S2]))
        ones = sum(qnum.measure(s, 0, rng)[0] for _ in range(4000))
        assert abs(ones / 4000 - 0.5) < 3 * 0.5 / np.sqrt(4000)


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(qnum.QNumError):
            StateVector(np.array([1.0, 1.0]))

    def test_rejects_bad_length(self):
        with pytest.raises(qnum.QNumError):
            StateVector(np.array([1.0, 0, 0]))

    def test_rejects_nan(self):
        with pytest.raises(qnum.QNumError):
            StateVector(np.array([np.nan, 0]))

    def test_width_limit(self):
        with pytest.raises(qnum.WidthError):
            StateVector.basis([0] * (qnum.MAX_QUBITS + 1))

    def test_immutable(self):
        s = StateVector.basis("0")
        with pytest.raises(ValueError):
            s.amps[0] = 0


class TestHouseholder:
    def test_already_pivot(self):
        f = qnum.householder_factor(np.array([1, 0], dtype=complex), 0)
        assert f.is_identity()

    def test_swap_column(self):
        col = np.array([0, 1], dtype=complex)
        f = qnum.householder_factor(col, 0)
        out = f.apply(col)
        assert abs(abs(out[0]) - 1) < 1e-12 and abs(out[1]) < 1e-12

    def test_random_columns(self, rng):
        for _ in range(25):
            v = rng.normal(size=8) + 1j * rng.normal(size=8)
            v /= np.linalg.norm(v)
            f = qnum.householder_factor(v, 0)
            assert abs(abs(f.apply(v)[0]) - 1) < 1e-10
            assert qnum.is_unitary(f.matrix())
            assert np.allclose(f.matrix() @ f.matrix(), np.eye(8))

    def test_entries_above_pivot_untouched(self, rng):
        v = rng.normal(size=4) + 0j
        f = qnum.householder_factor(v, 2)
        out = f.apply(v)
        assert np.allclose(out[:2], v[:2]) and abs(out[3]) < 1e-12


class TestPhase:
    def test_global_phase_equal(self, rng):
        u = qnum.random_unitary(4, rng)
        assert qnum.equal_up_to_phase(np.exp(0.7j) * u, u)
        assert qnum.phase_distance(np.exp(0.7j) * u, u) < 1e-12

    def test_distinct(self):
        assert not qnum.equal_up_to_phase(qnum.gate_matrix("X"), qnum.gate_matrix("Z"))

    def test_random_unitary(self, rng):
        assert qnum.is_unitary(qnum.random_unitary(8, rng), 1e-12)


class TestMatrixText:
    def test_round_trip(self, rng):
        u = qnum.random_unitary(4, rng)
        assert np.array_equal(qnum.parse_matrix_text(qnum.format_matrix_text(u)), u)

    @pytest.mark.parametrize("tok,val", [("1", 1), ("-2.5", -2.5), ("i", 1j), ("-i", -1j),
                                         ("1-2i", 1 - 2j), ("3e-2+1e1j", 0.03 + 10j), (".5i", 0.5j),
                                         ("2i", 2j), ("-1-i", -1 - 1j)])
    def test_tokens(self, tok, val):
        assert qnum.parse_complex(tok) == val

    @pytest.mark.parametrize("text", ["", "dim x\n1", "dim 2\n1 0\n", "dim 2\n1 0\n0 1 2\n", "rows 1\n1"])
    def test_bad_text(self, text):
        with pytest.raises(qnum.QNumError):
            qnum.parse_matrix_text(text)

    def test_bad_token(self):
        with pytest.raises(qnum.QNumError):
            qnum.parse_complex("1+")


class TestMS:
    def test_zero_angle(self):
        assert np.allclose(qnum.ms_gate(2, 0.0), np.eye(4))

    def test_single_qubit_phase(self):
        assert np.allclose(qnum.ms_gate(1, 0.9), np.exp(0.9j / 4) * np.eye(2))

    def test_inverse(self):
        assert np.linalg.norm(qnum.ms_gate(2, 0.8) @ qnum.ms_gate(2, -0.8) - np.eye(4)) < 1e-10

    def test_matches_expm_definition(self):
        x = qnum.gate_matrix("X")
        sx = np.kron(x, np.eye(2)) + np.kron(np.eye(2), x)
        w, v = np.linalg.eigh(sx @ sx)
        expect = v @ np.diag(np.exp(1j * 0.6 * w / 4)) @ v.conj().T
        assert np.allclose(qnum.ms_gate(2, 0.6), expect)

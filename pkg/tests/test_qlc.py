import numpy as np
import pytest

from corpus import CNOT_DUP, QUBIT_THUNK, NEGATIVE_TERMS, POSITIVE_TERMS
from qlang import circuit as C
from qlang.qlc import (
    BitT, Bang, LinearityError, Lolli, ParseError, Program, QBit, QTypeError, UnitT, check, parse, pretty, run_term,
    step, step_traced, typecheck,
)
from qlang.qlc import syntax as S
from qlang.qlc.gen import random_program
from qlang.qlc.machine import BoxError, FuelExhausted, MachineError
from qlang.qnum import StateVector, WidthError

S2 = 1 / np.sqrt(2)


def run(src, seed=0, **kw):
    term = check(parse(src)).term
    return run_term(term, np.random.Generator(np.random.Philox(seed)), **kw)


class TestParse:
    def test_identity(self):
        t = parse("fun x -> x")
        assert t == S.Lam("x", S.Var("x"))

    def test_coin_spine(self):
        t = parse("meas (H (qinit ff))")
        assert t == S.App(S.Const("meas"), S.App(S.Const("H"), S.App(S.Const("qinit"), S.FF)))

    def test_example_d7(self):
        t = parse(QUBIT_THUNK)
        expect = S.Lam("x", S.LetUnit(S.Var("x"), S.App(S.Const("H"), S.App(S.Const("qinit"), S.FF))))
        assert t == expect

    def test_alternative_lambdas(self):
        assert parse("\\x. x") == parse("lambda x. x") == parse("fun x -> x")

    def test_tuples_nest_right(self):
        assert parse("(a, b, c)") == parse("(a, (b, c))")

    def test_pretty_round_trip(self):
        for src, _ in NEGATIVE_TERMS + POSITIVE_TERMS:
            t = parse(src)
            assert parse(pretty(t)) == t

    @pytest.mark.parametrize("src", ["fun -> x", "let (x, y) = in z", "(a, b", "if x then y", "fun x -> )"])
    def test_errors_have_positions(self, src):
        with pytest.raises(ParseError) as ei:
            parse(src)
        assert ei.value.line == 1 and ei.value.col >= 1

    def test_multiline_position(self):
        with pytest.raises(ParseError) as ei:
            parse("fun x ->\n  let (a, b) = x\n  a")
        assert ei.value.line == 3


class TestTypes:
    def test_example_d7_duplicable(self):
        assert typecheck(parse(QUBIT_THUNK)) == Bang(Lolli(UnitT(), QBit()))

    @pytest.mark.parametrize("src,word", [("let q = qinit ff in (q, q)", "used 2 times"),
                                          ("let q = qinit ff in ()", "discarded")])
    def test_linearity_message_names_variable(self, src, word):
        with pytest.raises(LinearityError, match=f"'q' is {word}"):
            typecheck(parse(src))

    def test_cnot_duplication_rejected(self):
        with pytest.raises(QTypeError):
            typecheck(parse(CNOT_DUP))

    @pytest.mark.parametrize("src,why", NEGATIVE_TERMS)
    def test_negative_corpus(self, src, why):
        with pytest.raises(QTypeError):
            typecheck(parse(src))

    @pytest.mark.parametrize("src,ty", POSITIVE_TERMS)
    def test_positive_corpus(self, src, ty):
        assert str(typecheck(parse(src))) == ty

    def test_coin_is_bit(self):
        assert typecheck(parse("meas (H (qinit ff))")) == BitT()

    def test_no_duplicable_qubit(self):
        # promoting a qubit-producing application is impossible
        for src in ["let q = H (qinit ff) in (q, q)", "(fun q -> (q, q)) (qinit ff)"]:
            with pytest.raises(QTypeError):
                typecheck(parse(src))

    def test_context(self):
        assert typecheck(parse("H q"), {"q": QBit()}) == QBit()
        with pytest.raises(QTypeError):
            typecheck(parse("()"), {"q": QBit()})

    def test_box_type(self):
        t = typecheck(parse("box (fun w -> let (x, y) = w in CNOT (x, H y))"))
        assert str(t) == "circ(qbit * qbit, qbit * qbit)"


class TestMachine:
    def test_qinit(self):
        p, prob = step(Program.initial(parse("qinit tt")), np.random.Generator(np.random.Philox(0)))
        assert prob == 1.0
        assert len(p.L) == 1 and isinstance(p.M, S.Var) and p.M.name == p.L[0]
        assert np.allclose(p.Q.amps, [0, 1])

    def test_if(self):
        p, prob = step(Program.initial(parse("if tt then ff else tt")), np.random.Generator(np.random.Philox(0)))
        assert p.M == S.FF and prob == 1.0

    def test_measure_branch(self):
        q = StateVector(np.array([S2, S2]))
        seen = set()
        for seed in range(20):
            p = Program(q, ("x",), parse("meas x"))
            p2, ts = step_traced(p, np.random.Generator(np.random.Philox(seed)))
            assert ts.prob == pytest.approx(0.5) and ts.mass == pytest.approx(1.0)
            assert p2.L == () and p2.Q.n_qubits == 0
            seen.add(p2.M)
        assert seen == {S.TT, S.FF}

    def test_value_does_not_step(self):
        with pytest.raises(MachineError):
            step(Program.initial(S.TT), np.random.Generator(np.random.Philox(0)))

    def test_value_evaluates_to_itself(self):
        r = run("fun x -> x")
        assert r.trace == [] and r.value == parse("fun x -> x")

    def test_letrec(self):
        r = run("let rec f x = if x then ff else f tt in f ff")
        assert r.value == S.FF
        assert [t.rule for t in r.trace].count("letrec") >= 2

    def test_coin_frequency(self):
        term = parse("meas (H (qinit ff))")
        rng = np.random.Generator(np.random.Philox(7))
        n = 4000
        tt = sum(run_term(term, rng).value == S.TT for _ in range(n))
        assert abs(tt / n - 0.5) < 3 * 0.5 / np.sqrt(n)

    def test_bell_correlation(self):
        src = "let (a, b) = CNOT (H (qinit ff), qinit ff) in (meas a, meas b)"
        for seed in range(30):
            v = run(src, seed).value
            assert v.left == v.right

    def test_fuel(self):
        with pytest.raises(FuelExhausted):
            run("let rec f x = f x in f tt", fuel=200)

    def test_width_cap(self):
        src = "(qinit ff, qinit ff, qinit ff)"
        with pytest.raises(WidthError):
            run(src, max_qubits=2)

    def test_gate_parameters(self):
        r = run("RX[3.141592653589793] (qinit ff)")
        assert np.allclose(np.abs(r.program.Q.amps), [0, 1])


class TestBox:
    def test_single_gate(self):
        c = run("box (fun x -> H x)").value.circuit
        assert [g.name for g in c.ops] == ["H"]

    def test_pair_function(self):
        c = run("box (fun w -> let (x, y) = w in CNOT (x, H y))").value.circuit
        assert [(g.name, g.targets) for g in c.ops] == [("H", (1,)), ("CNOT", (0, 1))]

    def test_unbox_matches_function(self):
        for b in ("ff", "tt"):
            direct = run(f"H (qinit {b})").program.Q.amps
            boxed = run(f"unbox (box (fun x -> H x)) (qinit {b})").program.Q.amps
            assert np.allclose(direct, boxed)

    def test_unbox_cnot_on_basis(self):
        for x in ("ff", "tt"):
            for y in ("ff", "tt"):
                src = f"unbox (box (fun w -> CNOT w)) (qinit {x}, qinit {y})"
                ref = f"CNOT (qinit {x}, qinit {y})"
                assert np.allclose(run(src).program.Q.amps, run(ref).program.Q.amps)

    def test_boxed_used_twice(self):
        src = "let g = unbox (box (fun x -> H x)) in (meas (g (qinit ff)), meas (g (qinit ff)))"
        assert typecheck(parse(src)) is not None
        run(src)

    def test_unbox_empty_circuit(self):
        term = S.App(S.Unboxed(C.Circuit.identity(1)), S.App(S.Const("qinit"), S.TT))
        r = run_term(term, np.random.Generator(np.random.Philox(0)))
        assert np.allclose(r.program.Q.amps, [0, 1])

    def test_box_rejects_leftover(self):
        from qlang.qlc.machine import box_value
        with pytest.raises(BoxError):
            box_value(parse("fun x -> ()"))


class TestGenerator:
    def test_generated_programs_typecheck_and_run(self):
        rng = np.random.Generator(np.random.Philox(3))
        for _ in range(100):
            term = random_program(rng, max_qubits=6, max_depth=3)
            ty = typecheck(term)
            p = Program.initial(term)
            for _ in range(60):
                if p.M.is_value:
                    break
                p, ts = step_traced(p, rng, 6)
                assert abs(ts.mass - 1) < 1e-12
                check(p.M, {x: QBit() for x in p.L}, expected=ty)

    def test_deterministic(self):
        a = random_program(np.random.Generator(np.random.Philox(9)), 6, 3)
        b = random_program(np.random.Generator(np.random.Philox(9)), 6, 3)
        assert pretty(a) == pretty(b)

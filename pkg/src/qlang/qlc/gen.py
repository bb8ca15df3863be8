"""Type-directed random generation of closed well-typed programs.

Every generated term is well typed by construction: each linear variable
in scope is consumed exactly once, qubits are only ever dropped through
``meas`` followed by branching on the resulting bit, and recursion is
bounded so evaluation terminates. Used to fuzz the checker and machine.
"""
from __future__ import annotations

import itertools

from .syntax import (
    App, Bool, Const, FF, If, Lam, LetPair, LetRec, Pair, TT, UNIT, LetUnit, Term, Var,
)

QB, BT, U1 = "qbit", "bit", "1"
PAIR = "pair"  # qbit * qbit
THUNK = "thunk"  # !(1 -o qbit)
TARGETS = (QB, BT, PAIR, U1, THUNK)
_ONE_QUBIT = ("H", "X", "Z", "S", "T")


class ProgramGen:
    def __init__(self, rng, max_qubits: int = 6, max_depth: int = 4):
        self.rng = rng
        self.max_qubits = max_qubits
        self.max_depth = max_depth
        self._names = itertools.count()

    def fresh(self, base="v"):
        return f"{base}{next(self._names)}"

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def coin(self, p=0.5):
        return self.rng.random() < p

    def bit(self):
        return TT if self.coin() else FF

    def program(self, target=None) -> Term:
        target = target or self.pick(TARGETS)
        return self.gen(target, [], self.max_depth, 0)

    # ``lin`` is a list of (name, kind) that must each be consumed once;
    # ``live`` is the number of qubits already allocated on this path

    def gen(self, ty, lin, depth, live):
        if not lin and (depth <= 0 or self.coin(0.3)):
            return self.closed(ty, depth, live)
        if depth <= 0:
            return self.consume_all(ty, lin, live)
        choices = ["consume", "gate", "beta"] if lin else ["beta"]
        if live < self.max_qubits - 1:
            choices.append("alloc")
        if sum(k == QB for _, k in lin) >= 2:
            choices.append("cnot")
        if ty == PAIR:
            choices += ["pair", "pair"]
        choices.append("letpair")
        c = self.pick(choices)
        d = depth - 1
        if c == "consume" or (c == "gate" and not lin):
            return self.consume_one(ty, lin, d, live)
        if c == "gate":
            qs = [i for i, (_, k) in enumerate(lin) if k == QB]
            if not qs:
                return self.consume_one(ty, lin, d, live)
            i = self.pick(qs)
            x, y = lin[i][0], self.fresh("q")
            g = self.pick(_ONE_QUBIT)
            rest = lin[:i] + [(y, QB)] + lin[i + 1:]
            return App(Lam(y, self.gen(ty, rest, d, live)), App(Const(g), Var(x)))
        if c == "cnot":
            qs = [i for i, (_, k) in enumerate(lin) if k == QB]
            i, j = qs[0], qs[1]
            if self.coin():
                i, j = j, i
            a, b = self.fresh("q"), self.fresh("q")
            rest = [v for n, v in enumerate(lin) if n not in (i, j)] + [(a, QB), (b, QB)]
            bound = App(Const("CNOT"), Pair(Var(lin[i][0]), Var(lin[j][0])))
            return LetPair(a, b, bound, self.gen(ty, rest, d, live))
        if c == "alloc":
            y = self.fresh("q")
            body = self.gen(ty, lin + [(y, QB)], d, live + 1)
            init = App(Const("qinit"), self.bit())
            if self.coin(0.4):
                init = App(Const("H"), init)
            return App(Lam(y, body), init)
        if c == "beta":
            kind = self.pick((QB, BT))
            left, right = self.split(lin)
            y = self.fresh("y")
            arg = self.gen(kind, left, d, live)
            return App(Lam(y, self.gen(ty, right + [(y, kind)], d, live + 1)), arg)
        if c == "pair":
            left, right = self.split(lin)
            return Pair(self.gen(QB, left, d, live), self.gen(QB, right, d, live + 1))
        # letpair: build a qubit pair from part of the context, then destructure it
        left, right = self.split(lin)
        a, b = self.fresh("p"), self.fresh("p")
        bound = Pair(self.gen(QB, left, d, live), self.gen(QB, [], d, live + 1))
        return LetPair(a, b, bound, self.gen(ty, right + [(a, QB), (b, QB)], d, live + 2))

    def split(self, lin):
        left, right = [], []
        for v in lin:
            (left if self.coin() else right).append(v)
        return left, right

    def consume_one(self, ty, lin, depth, live):
        """Eliminate one linear variable, passing the rest on."""
        i = int(self.rng.integers(len(lin)))
        (x, kind), rest = lin[i], lin[:i] + lin[i + 1:]
        if not rest and kind == ty and self.coin(0.5):
            return Var(x)
        cond = Var(x) if kind == BT else App(Const("meas"), Var(x))
        then = self.gen(ty, rest, depth, live)
        else_ = self.gen(ty, rest, depth, live)
        return If(cond, then, else_)

    def consume_all(self, ty, lin, live):
        if len(lin) == 1 and lin[0][1] == ty:
            return Var(lin[0][0])
        if ty == PAIR and len(lin) == 2 and all(k == QB for _, k in lin):
            return Pair(Var(lin[0][0]), Var(lin[1][0]))
        if ty == BT and len(lin) == 1 and lin[0][1] == QB:
            return App(Const("meas"), Var(lin[0][0]))
        if not lin:
            return self.closed(ty, 0, live)
        return self.consume_one(ty, lin, 0, live)

    def closed(self, ty, depth, live):
        """A term of kind ``ty`` with no linear free variables."""
        if ty == U1:
            return UNIT
        if ty == BT:
            r = self.rng.random()
            if r < 0.4 or live >= self.max_qubits:
                return self.bit()
            if r < 0.7:
                g = Const(self.pick(_ONE_QUBIT + ("H", "H")))
                return App(Const("meas"), App(g, App(Const("qinit"), self.bit())))
            return self.letrec_bit()
        if ty == THUNK:
            u = self.fresh("u")
            return Lam(u, LetUnit(Var(u), self.qubit_source(live)))
        if ty == QB:
            if live >= self.max_qubits:
                raise RuntimeError("qubit budget exceeded")
            r = self.rng.random()
            if r < 0.25 and depth > 0:
                t = self.fresh("t")
                return App(Lam(t, App(Var(t), UNIT)), self.closed(THUNK, depth - 1, live))
            if r < 0.5:
                return self.boxed_apply(App(Const("qinit"), self.bit()))
            return self.qubit_source(live)
        if ty == PAIR:
            if live + 2 > self.max_qubits:
                raise RuntimeError("qubit budget exceeded")
            r = self.rng.random()
            if r < 0.3:
                f = self.fresh("f")
                fn = self.pick((Lam("z", App(Const(self.pick(_ONE_QUBIT)), Var("z"))), self.unboxed()))
                body = Pair(App(Var(f), App(Const("qinit"), self.bit())),
                            App(Var(f), App(Const("qinit"), self.bit())))
                return App(Lam(f, body), fn)
            if r < 0.55:
                a = App(Const("H"), App(Const("qinit"), FF))
                return App(Const("CNOT"), Pair(a, App(Const("qinit"), self.bit())))
            return Pair(self.closed(QB, depth - 1, live), self.closed(QB, depth - 1, live + 1))
        raise ValueError(ty)

    def qubit_source(self, live):
        t = App(Const("qinit"), self.bit())
        for _ in range(int(self.rng.integers(3))):
            t = App(Const(self.pick(_ONE_QUBIT)), t)
        return t

    def unboxed(self):
        z = self.fresh("z")
        body: Term = Var(z)
        for _ in range(1 + int(self.rng.integers(2))):
            body = App(Const(self.pick(_ONE_QUBIT)), body)
        return App(Const("unbox"), App(Const("box"), Lam(z, body)))

    def boxed_apply(self, arg):
        return App(self.unboxed(), arg)

    def letrec_bit(self):
        # f b = if b then <leaf> else f tt : terminates after at most one unfolding
        f, x = self.fresh("f"), self.fresh("x")
        leaf = self.pick((FF, TT, App(Const("meas"), App(Const("H"), App(Const("qinit"), FF)))))
        fbody = If(Var(x), leaf, App(Var(f), TT))
        return LetRec(f, x, fbody, App(Var(f), self.bit()))


def random_program(rng, max_qubits: int = 6, max_depth: int = 4, target=None) -> Term:
    while True:
        try:
            return ProgramGen(rng, max_qubits, max_depth).program(target)
        except RuntimeError:
            continue

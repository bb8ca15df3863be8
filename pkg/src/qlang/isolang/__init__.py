"""Reversible pattern-matching isos with inductive types and amplitudes."""
from importlib.resources import files

from .core import (
    AmpValue, CheckResult, FuelExhausted, Iso, IsoError, IsoTypeError, MatchError, Module,
    apply, apply_quantum, check_iso, enumerate_values, invert, is_quantum, overlap, placeholder,
    seq, structural_guard, to_matrix, uncovered, value_has_type,
)
from .syntax import (
    FF, NIL, STAR, TT, App, Combo, Fold, Inl, Inr, IsoRef, IsoSyntaxError, Mu, One, Pair, PVar,
    Star, Sum, Tensor, TVar, cons, from_list, parse_expr, parse_program, parse_type, show, to_list,
    value_key,
)

PRELUDE = files(__package__).joinpath("prelude.iso").read_text(encoding="utf-8")
_PRELUDE_LINES = PRELUDE.count("\n") + 1


def load(src: str = "", prelude: bool = True) -> Module:
    """Parse a program, by default on top of the standard definitions.

    Syntax error positions refer to ``src`` itself.
    """
    if not prelude:
        return Module.parse(src)
    try:
        return Module.parse(PRELUDE + "\n" + src)
    except IsoSyntaxError as e:
        if e.line is None or e.line <= _PRELUDE_LINES:
            raise
        raise IsoSyntaxError(e.msg, e.line - _PRELUDE_LINES, e.col) from None

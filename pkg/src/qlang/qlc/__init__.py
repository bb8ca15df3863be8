"""Quantum lambda calculus: syntax, linear types and the QRAM machine."""
from .syntax import ParseError, Term, parse, pretty
from .types import (
    Bang, BitT, CircT, LinearityError, Lolli, PromotionError, QBit, QType, QTypeError, Tensor,
    TypeVar, UnitT, check, typecheck,
)
from .machine import (
    BoxError, EvalResult, FuelExhausted, MachineError, Program, TraceStep, box_value, eval_program,
    run_term, step, step_traced, unbox_circuit,
)

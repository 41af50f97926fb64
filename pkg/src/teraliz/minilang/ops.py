"""Value semantics shared by the interpreter, the concolic engine and eval_sym.

Values are plain Python objects: ``int`` (always kept in int32 range),
``bool``, ``str`` and ``None`` for unit.
"""
from __future__ import annotations

from enum import Enum

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1


class ErrorKind(str, Enum):
    DIV_BY_ZERO = "DivByZero"
    MOD_BY_ZERO = "ModByZero"
    STEP_LIMIT = "StepLimitExceeded"
    CALL_DEPTH = "CallDepthExceeded"

    @property
    def catchable(self) -> bool:
        return self in (ErrorKind.DIV_BY_ZERO, ErrorKind.MOD_BY_ZERO)


class RuntimeFault(Exception):
    """A MiniLang runtime error. Only division faults are catchable."""

    def __init__(self, kind: ErrorKind, span=None, message: str = ""):
        super().__init__(message or kind.value)
        self.kind = kind
        self.span = span

    @property
    def catchable(self) -> bool:
        return self.kind.catchable


def wrap(x: int) -> int:
    return ((x + 2**31) & 0xFFFFFFFF) - 2**31


def trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def binary(op: str, a, b, span=None):
    """Apply a strict binary operator (``&&``/``||`` are handled by callers)."""
    if op == "+":
        return wrap(a + b)
    if op == "-":
        return wrap(a - b)
    if op == "*":
        return wrap(a * b)
    if op == "/":
        if b == 0:
            raise RuntimeFault(ErrorKind.DIV_BY_ZERO, span)
        return wrap(trunc_div(a, b))
    if op == "%":
        if b == 0:
            raise RuntimeFault(ErrorKind.MOD_BY_ZERO, span)
        return wrap(a - b * trunc_div(a, b))
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "&&":
        return a and b
    if op == "||":
        return a or b
    raise ValueError(f"unknown operator {op!r}")


def unary(op: str, a):
    if op == "-":
        return wrap(-a)
    if op == "!":
        return not a
    raise ValueError(f"unknown operator {op!r}")


def same_value(a, b) -> bool:
    """Value equality that keeps ``True`` and ``1`` apart."""
    return type(a) is type(b) and a == b

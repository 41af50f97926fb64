"""Concrete big-step evaluator and unit-test runner."""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

from .minilang import ops
from .minilang.nodes import (
    AssertEq,
    AssertFalse,
    AssertThrows,
    AssertTrue,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    ExprStmt,
    FunctionDecl,
    If,
    IntLit,
    Let,
    Return,
    StrLit,
    Unary,
    Var,
    While,
    assertions_of,
)
from .minilang.ops import ErrorKind, RuntimeFault
from .minilang.program import Program

# A MiniLang call nests roughly eight Python frames.
if sys.getrecursionlimit() < 20_000:
    sys.setrecursionlimit(20_000)


@dataclass(frozen=True)
class Budget:
    max_steps: int = 1_000_000
    max_call_depth: int = 100

    def __post_init__(self):
        if self.max_steps <= 0 or self.max_call_depth <= 0:
            raise ValueError("budget limits must be positive")


class Status(str, Enum):
    PASSED = "Passed"
    FAILED = "Failed"
    ERRORED = "Errored"


@dataclass
class TestOutcome:
    __test__ = False

    name: str
    file: str
    status: Status
    assertion_index: int | None = None
    expected: Any = None
    actual: Any = None
    error: ErrorKind | None = None
    steps: int = 0
    wall_ms: float = 0.0
    covered: frozenset[str] = field(default_factory=frozenset, compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return self.status is Status.PASSED

    def to_json(self) -> dict:
        failures = []
        if self.status is Status.FAILED:
            failures.append(
                {"index": self.assertion_index, "expected": self.expected, "actual": self.actual}
            )
        return {
            "name": self.name,
            "file": self.file,
            "status": self.status.value,
            "assertion_failures": failures,
            "error": self.error.value if self.error else None,
        }


class AssertionFailed(Exception):
    def __init__(self, index: int, expected, actual, function: str):
        super().__init__(f"assertion {index} in {function}: expected {expected!r}, got {actual!r}")
        self.index = index
        self.expected = expected
        self.actual = actual
        self.function = function


class OracleFault(Exception):
    """A runtime fault raised while evaluating an expected-value oracle."""

    def __init__(self, fault: RuntimeFault):
        super().__init__(str(fault))
        self.fault = fault


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    """Tree-walking evaluator over a :class:`Program`.

    Optional instrumentation:

    * ``trace`` collects one ``(file, offset, kind, taken)`` event per branch
      decision: if/while guards, the left operand of ``&&``/``||`` and the
      divisor check of ``/`` and ``%``.
    * ``on_call(node, args)`` runs before every call expression.
    * ``natives`` maps function names to Python callables that replace the
      MiniLang definition.
    * faults raised inside ``oracle_names`` functions surface as
      :class:`OracleFault`.
    """

    def __init__(
        self,
        program: Program,
        budget: Budget = Budget(),
        *,
        trace: list | None = None,
        on_call: Callable | None = None,
        natives: dict[str, Callable] | None = None,
        oracle_names: Sequence[str] = (),
    ):
        self.program = program
        self.budget = budget
        self.trace = trace
        self.on_call = on_call
        self.natives = natives or {}
        self.oracle_names = frozenset(oracle_names)
        self.steps = 0
        self.depth = 0
        self.path: str | None = None
        self.covered: set[str] = set()
        self._ordinals: dict[int, int] = {}

    # -- calls ---------------------------------------------------------------

    def call(self, name: str, args: Sequence, from_path: str | None = None):
        fn, path = self.program.resolve(name, from_path)
        return self.invoke(fn, path, args)

    def invoke(self, fn: FunctionDecl, path: str, args: Sequence):
        self.tick()
        if self.depth >= self.budget.max_call_depth:
            raise RuntimeFault(ErrorKind.CALL_DEPTH, fn.span)
        self.covered.add(fn.name)
        native = self.natives.get(fn.name)
        if native is not None:
            return native(list(args))
        env = {p.name: a for p, a in zip(fn.params, args)}
        saved = self.path
        self.path = path
        self.depth += 1
        try:
            if fn.name in self.oracle_names:
                try:
                    self.exec_block(fn.body, env)
                except RuntimeFault as fault:
                    raise OracleFault(fault) from None
            else:
                self.exec_block(fn.body, env)
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1
            self.path = saved
        return None

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget.max_steps:
            raise RuntimeFault(ErrorKind.STEP_LIMIT, None)

    # -- statements ----------------------------------------------------------

    def exec_block(self, block: Block, env: dict) -> None:
        for stmt in block.stmts:
            self.exec(stmt, env)

    def exec(self, s, env: dict) -> None:
        self.tick()
        t = type(s)
        if t is Let or t is Assign:
            env[s.name] = self.eval(s.value, env)
        elif t is If:
            if self.branch(s, self.eval(s.cond, env)):
                self.exec_block(s.then, env)
            elif s.orelse is not None:
                self.exec_block(s.orelse, env)
        elif t is While:
            while self.branch(s, self.eval(s.cond, env)):
                self.exec_block(s.body, env)
                self.tick()
        elif t is Return:
            raise _Return(None if s.value is None else self.eval(s.value, env))
        elif t is ExprStmt:
            self.eval(s.expr, env)
        elif t is AssertEq:
            expected = self.eval(s.expected, env)
            actual = self.eval(s.actual, env)
            if not ops.same_value(expected, actual):
                raise AssertionFailed(self.ordinal(s), expected, actual, self.path or "")
        elif t is AssertTrue or t is AssertFalse:
            value = self.eval(s.expr, env)
            if value is not (t is AssertTrue):
                raise AssertionFailed(self.ordinal(s), t is AssertTrue, value, self.path or "")
        elif t is AssertThrows:
            self.exec_throws(s, env)
        else:
            raise TypeError(f"unknown statement {s!r}")

    def exec_throws(self, s: AssertThrows, env: dict) -> None:
        expected = s.kind or "catchable error"
        try:
            self.exec_block(s.body, env)
        except RuntimeFault as fault:
            if not fault.catchable:
                raise
            if s.kind is None or fault.kind.value == s.kind:
                return
            raise AssertionFailed(self.ordinal(s), expected, fault.kind.value, self.path or "") from None
        raise AssertionFailed(self.ordinal(s), expected, None, self.path or "")

    def ordinal(self, stmt) -> int:
        return self._ordinals.get(id(stmt), -1)

    def number_assertions(self, fn: FunctionDecl) -> None:
        for k, a in enumerate(assertions_of(fn)):
            self._ordinals[id(a)] = k

    def branch(self, node, taken) -> bool:
        if self.trace is not None:
            self.trace.append((self.path, node.span.start, type(node).__name__, taken))
        return taken

    # -- expressions ---------------------------------------------------------

    def eval(self, e, env: dict):
        t = type(e)
        if t is IntLit or t is BoolLit or t is StrLit:
            return e.value
        if t is Var:
            return env[e.name]
        if t is Binary:
            op = e.op
            if op == "&&":
                if not self.branch(e, self.eval(e.left, env)):
                    return False
                return self.eval(e.right, env)
            if op == "||":
                if self.branch(e, self.eval(e.left, env)):
                    return True
                return self.eval(e.right, env)
            left = self.eval(e.left, env)
            right = self.eval(e.right, env)
            if (op == "/" or op == "%") and self.trace is not None:
                self.branch(e, right != 0)
            return ops.binary(op, left, right, e.span)
        if t is Unary:
            return ops.unary(e.op, self.eval(e.operand, env))
        if t is Call:
            args = [self.eval(a, env) for a in e.args]
            if self.on_call is not None:
                self.on_call(e, args)
            return self.call(e.name, args, self.path)
        raise TypeError(f"unknown expression {e!r}")


def eval_call(program: Program, fn_name: str, args: Sequence, budget: Budget = Budget(), *, trace: list | None = None):
    """Call ``fn_name`` with concrete ``args``. Raises :class:`RuntimeFault`."""
    return Interpreter(program, budget, trace=trace).call(fn_name, args)


def run_function_as_test(interp: Interpreter, fn: FunctionDecl, path: str, args: Sequence = ()) -> TestOutcome:
    """Execute a test-like function, converting assertion and runtime failures into an outcome."""
    interp.number_assertions(fn)
    start = time.perf_counter()
    outcome = TestOutcome(fn.name, path, Status.PASSED)
    try:
        interp.invoke(fn, path, args)
    except AssertionFailed as failure:
        outcome.status = Status.FAILED
        outcome.assertion_index = failure.index
        outcome.expected = failure.expected
        outcome.actual = failure.actual
    except RuntimeFault as fault:
        outcome.status = Status.ERRORED
        outcome.error = fault.kind
    outcome.steps = interp.steps
    outcome.wall_ms = (time.perf_counter() - start) * 1000.0
    outcome.covered = frozenset(interp.covered)
    return outcome


def run_test(program: Program, test_fn: str, budget: Budget = Budget()) -> TestOutcome:
    """Run one annotated unit test. ``#[repeated(n)]`` tests execute once."""
    fn, path = program.test(test_fn)
    return run_function_as_test(Interpreter(program, budget), fn, path)


def run_suite(program: Program, budget: Budget = Budget()) -> list[TestOutcome]:
    """Run every unit test sequentially, in file then source order."""
    return [run_test(program, fn.name, budget) for fn, _ in program.tests()]

"""Single-path symbolic execution of a method under test.

The engine follows exactly the path the seed inputs take and records, for
every branch decision that depends on a generalizable parameter, the
constraint that keeps later inputs on that path. Nothing is solved and no
alternative path is explored.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence, Union

from .minilang import ops
from .minilang.nodes import (
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    ExprStmt,
    If,
    IntLit,
    Let,
    Return,
    StrLit,
    Type,
    Unary,
    Var,
    While,
)
from .minilang.ops import ErrorKind, RuntimeFault
from .minilang.parser import PRECEDENCE, parse_expr
from .minilang.printer import print_expr
from .minilang.program import Program
from .interp import Budget, Interpreter, run_function_as_test

if TYPE_CHECKING:
    from .analyzer import MutRef

# -- symbolic expressions ----------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int | bool | str


@dataclass(frozen=True)
class Param:
    index: int
    name: str
    type: Type


@dataclass(frozen=True)
class SymUnary:
    op: str
    operand: SymExpr


@dataclass(frozen=True)
class SymBinary:
    op: str
    left: SymExpr
    right: SymExpr


SymExpr = Union[Const, Param, SymUnary, SymBinary]

_NEGATED = {"<": ">=", ">=": "<", ">": "<=", "<=": ">", "==": "!=", "!=": "=="}


def negate(c: SymExpr) -> SymExpr:
    """Logical negation that flips comparisons instead of wrapping them in ``!``."""
    if isinstance(c, SymBinary) and c.op in _NEGATED:
        return SymBinary(_NEGATED[c.op], c.left, c.right)
    if isinstance(c, SymUnary) and c.op == "!":
        return c.operand
    if isinstance(c, Const):
        return Const(not c.value)
    return SymUnary("!", c)


def params_of(e: SymExpr) -> set[int]:
    found: set[int] = set()
    stack = [e]
    seen: set[int] = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, Param):
            found.add(n.index)
        elif isinstance(n, SymUnary):
            stack.append(n.operand)
        elif isinstance(n, SymBinary):
            stack.append(n.left)
            stack.append(n.right)
    return found


def eval_sym(e: SymExpr, assignment: Mapping[int, object]):
    """Evaluate ``e`` with interpreter semantics. Raises :class:`RuntimeFault`."""
    memo: dict[int, object] = {}

    def go(n):
        key = id(n)
        if key in memo:
            return memo[key]
        t = type(n)
        if t is Const:
            v = n.value
        elif t is Param:
            v = assignment[n.index]
        elif t is SymUnary:
            v = ops.unary(n.op, go(n.operand))
        elif n.op == "&&":
            v = go(n.left) and go(n.right)
        elif n.op == "||":
            v = go(n.left) or go(n.right)
        else:
            v = ops.binary(n.op, go(n.left), go(n.right))
        memo[key] = v
        return v

    return go(e)


# -- rendering ---------------------------------------------------------------


def to_ast(e: SymExpr):
    """Convert to a MiniLang expression (parameters become variables)."""
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, bool):
            return BoolLit(v)
        if isinstance(v, int):
            return IntLit(v)
        return StrLit(v)
    if isinstance(e, Param):
        return Var(e.name)
    if isinstance(e, SymUnary):
        return Unary(e.op, to_ast(e.operand))
    return Binary(e.op, to_ast(e.left), to_ast(e.right))


def render(e: SymExpr) -> str:
    return print_expr(to_ast(e))


def from_ast(expr, params: Mapping[str, Param]) -> SymExpr:
    """Inverse of :func:`to_ast` for expressions over the given parameters."""
    if isinstance(expr, (IntLit, BoolLit, StrLit)):
        return Const(expr.value)
    if isinstance(expr, Var):
        return params[expr.name]
    if isinstance(expr, Unary):
        return SymUnary(expr.op, from_ast(expr.operand, params))
    if isinstance(expr, Binary):
        return SymBinary(expr.op, from_ast(expr.left, params), from_ast(expr.right, params))
    raise ValueError(f"not a symbolic expression: {print_expr(expr)}")


def parse_sym(text: str, params: Iterable[Param]) -> SymExpr:
    return from_ast(parse_expr(text), {p.name: p for p in params})


class RenderedLength:
    """Rendered length of symbolic expressions without building the strings.

    Shared subterms make rendered text exponential in the worst case, so the
    size cap has to be checked before anything is printed.
    """

    def __init__(self):
        self._memo: dict[int, tuple[SymExpr, int]] = {}

    def __call__(self, e: SymExpr) -> int:
        hit = self._memo.get(id(e))
        if hit is not None and hit[0] is e:
            return hit[1]
        if isinstance(e, (Const, Param)):
            n = len(render(e))
        elif isinstance(e, SymUnary):
            n = 1 + self(e.operand)
            negative_literal = (
                e.op == "-"
                and isinstance(e.operand, Const)
                and isinstance(e.operand.value, int)
                and e.operand.value >= 0
            )
            if _prec(e.operand) < 7 or negative_literal:
                n += 2
        else:
            p = _prec(e)
            n = self(e.left) + self(e.right) + len(e.op) + 2
            if _prec(e.left) < p:
                n += 2
            if _prec(e.right) <= p:
                n += 2
        self._memo[id(e)] = (e, n)
        return n


def _prec(e: SymExpr) -> int:
    if isinstance(e, SymBinary):
        return PRECEDENCE[e.op]
    if isinstance(e, SymUnary):
        return 7
    return 8


# -- specifications ----------------------------------------------------------


@dataclass(frozen=True)
class ValueOutcome:
    expr: SymExpr


@dataclass(frozen=True)
class ErrorOutcome:
    kind: ErrorKind


Outcome = Union[ValueOutcome, ErrorOutcome]


@dataclass(frozen=True)
class PathSpec:
    fn_name: str
    concrete_inputs: tuple
    symbolic_params: tuple[Param, ...]
    pc: tuple[SymExpr, ...]
    outcome: Outcome
    concrete_outcome: object
    mut: MutRef | None = field(default=None, compare=False)

    @property
    def param_indices(self) -> tuple[int, ...]:
        return tuple(p.index for p in self.symbolic_params)

    @property
    def seed(self) -> tuple:
        """Seed values of the generalizable parameters, in parameter order."""
        return tuple(self.concrete_inputs[i] for i in self.param_indices)

    def rendered_pc(self) -> list[str]:
        return [render(c) for c in self.pc]

    def rendered_outcome(self) -> str:
        if isinstance(self.outcome, ErrorOutcome):
            return self.outcome.kind.value
        return render(self.outcome.expr)

    def satisfied_by(self, assignment: Mapping[int, object]) -> bool:
        try:
            return all(eval_sym(c, assignment) is True for c in self.pc)
        except RuntimeFault:
            return False


class FailureCause(str, Enum):
    ENGINE_ERROR = "EngineError"
    SPEC_SIZE = "SpecSizeExceeded"
    DEPTH = "DepthExceeded"
    TIMEOUT = "Timeout"
    BUDGET = "OutOfBudget"


@dataclass(frozen=True)
class ExtractionFailure:
    cause: FailureCause
    detail: str


@dataclass(frozen=True)
class ExtractionLimits:
    max_steps: int = 1_000_000
    max_pc_chars: int = 100_000
    max_call_depth: int = 100
    wall_timeout_s: float = 60.0

    def __post_init__(self):
        if min(self.max_steps, self.max_pc_chars, self.max_call_depth) <= 0 or self.wall_timeout_s <= 0:
            raise ValueError("extraction limits must be positive")


class _Abort(Exception):
    def __init__(self, cause: FailureCause, detail: str):
        self.cause = cause
        self.detail = detail


class _Return(Exception):
    def __init__(self, value):
        self.value = value


# A value is (concrete, symbolic); symbolic is None when the value does not
# depend on any generalizable parameter.


class _Executor:
    def __init__(self, program: Program, limits: ExtractionLimits):
        self.program = program
        self.limits = limits
        self.steps = 0
        self.depth = 0
        self.pc: list[SymExpr] = []
        self.pc_chars = 0
        self.length = RenderedLength()
        self.deadline = time.monotonic() + limits.wall_timeout_s

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _Abort(FailureCause.BUDGET, f"more than {self.limits.max_steps} steps")
        if self.steps % 4096 == 0 and time.monotonic() > self.deadline:
            raise _Abort(FailureCause.TIMEOUT, f"exceeded {self.limits.wall_timeout_s} s")

    def record(self, conj: SymExpr) -> None:
        size = self.length(conj) + (4 if self.pc else 0)
        self.pc_chars += size
        if self.pc_chars > self.limits.max_pc_chars:
            raise _Abort(FailureCause.SPEC_SIZE, f"path condition exceeds {self.limits.max_pc_chars} characters")
        self.pc.append(conj)

    def branch(self, value) -> bool:
        c, s = value
        if s is not None:
            self.record(s if c else negate(s))
        return c

    def invoke(self, name: str, args: list):
        self.tick()
        fn = self.program.impl_function(name)
        if fn is None:
            raise _Abort(FailureCause.ENGINE_ERROR, f"call to non-implementation function {name!r}")
        if self.depth >= self.limits.max_call_depth:
            raise _Abort(FailureCause.DEPTH, f"call depth exceeds {self.limits.max_call_depth}")
        env = {p.name: a for p, a in zip(fn.params, args)}
        self.depth += 1
        try:
            self.exec_block(fn.body, env)
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1
        return (None, None)

    def exec_block(self, block: Block, env: dict) -> None:
        for s in block.stmts:
            self.exec(s, env)

    def exec(self, s, env: dict) -> None:
        self.tick()
        t = type(s)
        if t is Let or t is Assign:
            env[s.name] = self.eval(s.value, env)
        elif t is If:
            if self.branch(self.eval(s.cond, env)):
                self.exec_block(s.then, env)
            elif s.orelse is not None:
                self.exec_block(s.orelse, env)
        elif t is While:
            while self.branch(self.eval(s.cond, env)):
                self.exec_block(s.body, env)
                self.tick()
        elif t is Return:
            raise _Return((None, None) if s.value is None else self.eval(s.value, env))
        elif t is ExprStmt:
            self.eval(s.expr, env)
        else:
            raise _Abort(FailureCause.ENGINE_ERROR, f"unsupported statement {type(s).__name__}")

    def eval(self, e, env: dict):
        t = type(e)
        if t is IntLit or t is BoolLit or t is StrLit:
            return (e.value, None)
        if t is Var:
            return env[e.name]
        if t is Binary:
            op = e.op
            if op == "&&" or op == "||":
                left = self.eval(e.left, env)
                if self.branch(left) == (op == "||"):
                    return (left[0], None)
                return self.eval(e.right, env)
            lc, ls = self.eval(e.left, env)
            rc, rs = self.eval(e.right, env)
            if (op == "/" or op == "%") and rs is not None:
                self.record(SymBinary("!=" if rc != 0 else "==", rs, Const(0)))
            value = ops.binary(op, lc, rc, e.span)
            if ls is None and rs is None:
                return (value, None)
            return (value, SymBinary(op, Const(lc) if ls is None else ls, Const(rc) if rs is None else rs))
        if t is Unary:
            c, s = self.eval(e.operand, env)
            value = ops.unary(e.op, c)
            return (value, None if s is None else SymUnary(e.op, s))
        if t is Call:
            return self.invoke(e.name, [self.eval(a, env) for a in e.args])
        raise _Abort(FailureCause.ENGINE_ERROR, f"unsupported expression {type(e).__name__}")


def _symbolic(value) -> SymExpr:
    c, s = value
    return Const(c) if s is None else s


def extract_from_values(
    program: Program,
    fn_name: str,
    args: Sequence,
    generalizable: Iterable[int],
    limits: ExtractionLimits = ExtractionLimits(),
    *,
    expect_error: bool = False,
    mut: MutRef | None = None,
) -> PathSpec | ExtractionFailure:
    """Run ``fn_name(*args)`` with the ``generalizable`` positions symbolic."""
    fn = program.impl_function(fn_name)
    if fn is None:
        return ExtractionFailure(FailureCause.ENGINE_ERROR, f"unknown function {fn_name!r}")
    if fn.return_type is Type.VOID and not expect_error:
        return ExtractionFailure(FailureCause.ENGINE_ERROR, f"{fn_name} returns void, so there is no outcome to check")
    indices = sorted(set(generalizable))
    params = tuple(Param(i, fn.params[i].name, fn.params[i].type) for i in indices)
    by_index = {p.index: p for p in params}
    values = [(a, by_index[i] if i in by_index else None) for i, a in enumerate(args)]
    ex = _Executor(program, limits)
    try:
        result = ex.invoke(fn_name, values)
        outcome: Outcome = ValueOutcome(_symbolic(result))
        concrete = result[0]
        if expect_error:
            return ExtractionFailure(
                FailureCause.ENGINE_ERROR, f"{fn_name} returned normally under assert_throws"
            )
        out_len = ex.length(outcome.expr)
        if out_len > limits.max_pc_chars:
            return ExtractionFailure(
                FailureCause.SPEC_SIZE, f"outcome exceeds {limits.max_pc_chars} characters"
            )
    except _Abort as abort:
        return ExtractionFailure(abort.cause, abort.detail)
    except RuntimeFault as fault:
        if not expect_error:
            return ExtractionFailure(
                FailureCause.ENGINE_ERROR, f"{fault.kind.value} raised outside assert_throws"
            )
        outcome = ErrorOutcome(fault.kind)
        concrete = fault.kind
    spec = PathSpec(fn_name, tuple(args), params, tuple(ex.pc), outcome, concrete, mut)
    problem = check_consistency(spec)
    if problem:
        return ExtractionFailure(FailureCause.ENGINE_ERROR, problem)
    return spec


def check_consistency(spec: PathSpec) -> str | None:
    """Return a description of the first self-consistency violation, if any."""
    seed = dict(zip(spec.param_indices, spec.seed))
    for c in spec.pc:
        try:
            if eval_sym(c, seed) is not True:
                return f"seed violates {render(c)}"
        except RuntimeFault as fault:
            return f"{fault.kind.value} evaluating {render(c)} at the seed"
    if isinstance(spec.outcome, ValueOutcome):
        try:
            value = eval_sym(spec.outcome.expr, seed)
        except RuntimeFault as fault:
            return f"{fault.kind.value} evaluating outcome at the seed"
        if not ops.same_value(value, spec.concrete_outcome):
            return f"outcome evaluates to {value!r}, execution returned {spec.concrete_outcome!r}"
    return None


class _Captured(Exception):
    def __init__(self, args):
        self.args_ = args


def capture_seed(program: Program, mut: MutRef, budget: Budget = Budget()) -> list | None:
    """Concrete argument values of the MUT call, observed by running its test."""
    fn, path = program.test(mut.test)

    def hook(node, args):
        if interp.path == mut.file and node.span == mut.call_span:
            raise _Captured(list(args))

    interp = Interpreter(program, budget, on_call=hook)
    try:
        run_function_as_test(interp, fn, path)
    except _Captured as cap:
        return cap.args_
    return None


def extract_spec(
    program: Program, mut: MutRef, limits: ExtractionLimits = ExtractionLimits()
) -> PathSpec | ExtractionFailure:
    """Extract the path specification of one MUT call site."""
    seeds = capture_seed(program, mut, Budget(limits.max_steps, limits.max_call_depth))
    if seeds is None:
        return ExtractionFailure(FailureCause.ENGINE_ERROR, "MUT call site not reached by its test")
    return extract_from_values(
        program,
        mut.fn_name,
        seeds,
        mut.generalizable_params,
        limits,
        expect_error=mut.expects_error,
        mut=mut,
    )

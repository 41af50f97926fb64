"""Mutation operators over implementation files and a kill-matrix runner."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Sequence, Union

from .generalizer import (
    Draws,
    GeneralizedTest,
    PropertyStatus,
    draw_inputs,
    run_property,
)
from .interp import Budget, Interpreter, Status, run_function_as_test
from .minilang.checker import check_file
from .minilang.nodes import (
    ARITH_OPS,
    ORDER_OPS,
    Assign,
    Binary,
    BoolLit,
    Call,
    ExprStmt,
    FunctionDecl,
    If,
    IntLit,
    Return,
    SourceFile,
    StrLit,
    Type,
    Unary,
    Var,
    transform,
    walk,
)
from .minilang.ops import ErrorKind
from .minilang.parser import parse_file
from .minilang.printer import pretty_print, print_expr
from .minilang.program import Program

log = logging.getLogger(__name__)

MIN_MUTANT_STEPS = 10_000
STEP_FACTOR = 4


class Operator(str, Enum):
    MATH = "Math"
    INCREMENTS = "Increments"
    INVERT_NEGS = "InvertNegs"
    BOOLEAN_TRUE_RETURN = "BooleanTrueReturnVals"
    BOOLEAN_FALSE_RETURN = "BooleanFalseReturnVals"
    PRIMITIVE_RETURNS = "PrimitiveReturns"
    EMPTY_OBJECT_RETURN = "EmptyObjectReturnVals"
    REMOVE_CONDITIONAL_EQUAL_ELSE = "RemoveConditionalEqualElse"
    REMOVE_CONDITIONAL_ORDER_ELSE = "RemoveConditionalOrderElse"
    CONDITIONALS_BOUNDARY = "ConditionalsBoundary"
    VOID_METHOD_CALL = "VoidMethodCall"


MATH_SWAP = {"+": "-", "-": "+", "*": "/", "/": "*", "%": "*"}
BOUNDARY_SWAP = {"<": "<=", "<=": "<", ">": ">=", ">=": ">"}


@dataclass(frozen=True)
class Mutant:
    id: str
    operator: Operator
    file: str
    function: str
    line: int
    col: int
    description: str
    source: SourceFile = field(compare=False, repr=False)

    def apply(self, program: Program) -> Program:
        return program.with_file(self.source)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "op": self.operator.value,
            "file": self.file,
            "function": self.function,
            "line": self.line,
            "col": self.col,
            "description": self.description,
        }


def _is_increment(s) -> bool:
    v = s.value if isinstance(s, Assign) else None
    return (
        isinstance(v, Binary)
        and v.op in ("+", "-")
        and isinstance(v.left, Var)
        and v.left.name == s.name
        and isinstance(v.right, IntLit)
        and v.right.value == 1
    )


def _candidates(fn: FunctionDecl) -> list[tuple[Operator, object, object]]:
    """(operator, original node, replacement) in source order; ``None`` deletes a statement."""
    increments = {id(n.value) for n in walk(fn.body) if isinstance(n, Assign) and _is_increment(n)}
    out = []
    for n in walk(fn.body):
        if isinstance(n, Binary):
            if n.op in ARITH_OPS and id(n) not in increments:
                out.append((Operator.MATH, n, Binary(MATH_SWAP[n.op], n.left, n.right, n.span)))
            if n.op in ORDER_OPS:
                out.append((Operator.CONDITIONALS_BOUNDARY, n, Binary(BOUNDARY_SWAP[n.op], n.left, n.right, n.span)))
        elif isinstance(n, Assign) and _is_increment(n):
            v = n.value
            flipped = Binary("-" if v.op == "+" else "+", v.left, v.right, v.span)
            out.append((Operator.INCREMENTS, n, Assign(n.name, flipped, n.span)))
        elif isinstance(n, Unary) and n.op == "-" and isinstance(n.operand, Var):
            out.append((Operator.INVERT_NEGS, n, n.operand))
        elif isinstance(n, Return) and n.value is not None:
            rt = fn.return_type
            if rt is Type.BOOL:
                out.append((Operator.BOOLEAN_TRUE_RETURN, n, Return(BoolLit(True), n.span)))
                out.append((Operator.BOOLEAN_FALSE_RETURN, n, Return(BoolLit(False), n.span)))
            elif rt is Type.INT:
                out.append((Operator.PRIMITIVE_RETURNS, n, Return(IntLit(0), n.span)))
            elif rt is Type.STR:
                out.append((Operator.EMPTY_OBJECT_RETURN, n, Return(StrLit(""), n.span)))
        elif isinstance(n, If) and isinstance(n.cond, Binary):
            if n.cond.op in ("==", "!="):
                out.append((Operator.REMOVE_CONDITIONAL_EQUAL_ELSE, n, If(BoolLit(False), n.then, n.orelse, n.span)))
            elif n.cond.op in ORDER_OPS:
                out.append((Operator.REMOVE_CONDITIONAL_ORDER_ELSE, n, If(BoolLit(False), n.then, n.orelse, n.span)))
        elif isinstance(n, ExprStmt) and isinstance(n.expr, Call):
            out.append((Operator.VOID_METHOD_CALL, n, None))
    return out


def _describe(node, replacement) -> str:
    def show(x) -> str:
        if x is None:
            return "<removed>"
        if isinstance(x, If):
            return f"if {print_expr(x.cond)}"
        if isinstance(x, Return):
            return f"return {print_expr(x.value)}"
        if isinstance(x, Assign):
            return f"{x.name} = {print_expr(x.value)}"
        if isinstance(x, ExprStmt):
            return print_expr(x.expr)
        return print_expr(x)

    return f"{show(node)} -> {show(replacement)}"


def enumerate_mutants(program: Program) -> list[Mutant]:
    """All mutants of the implementation files, in file, function and source order."""
    impl_files = program.impl_files
    mutants: list[Mutant] = []
    for sf in impl_files:
        void_fns = {fn.name for f in impl_files for fn in f.functions if fn.return_type is Type.VOID}
        for fn in sf.functions:
            for op, node, replacement in _candidates(fn):
                if op is Operator.VOID_METHOD_CALL and node.expr.name not in void_fns:
                    continue
                new_fn = transform(fn, lambda n, _t=node, _r=replacement: _r if n is _t else n)
                if new_fn == fn:
                    continue  # identity mutant, e.g. `return true` under BooleanTrueReturnVals
                source = SourceFile(
                    sf.path, tuple(new_fn if f is fn else f for f in sf.functions), sf.kind, sf.span
                )
                check_file(source, impl_files)
                mutants.append(
                    Mutant(
                        f"m{len(mutants):03d}",
                        op,
                        sf.path,
                        fn.name,
                        node.span.line,
                        node.span.col,
                        _describe(node, replacement),
                        source,
                    )
                )
    return mutants


def reparse_mutant(m: Mutant, program: Program) -> SourceFile:
    """Round-trip a mutant through text; raises if it no longer parses or checks."""
    others = [f for f in program.impl_files if f.path != m.file]
    return parse_file(pretty_print(m.source), m.source.kind, m.file, externs=others)


# -- running ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OriginalTest:
    name: str

    @property
    def id(self) -> str:
        return self.name


SuiteTest = Union[OriginalTest, GeneralizedTest]


class Cell(str, Enum):
    KILLED = "Killed"
    SURVIVED = "Survived"
    TIMED_OUT = "TimedOut"
    NOT_COVERED = "NotCovered"

    @property
    def detects(self) -> bool:
        return self in (Cell.KILLED, Cell.TIMED_OUT)


class NotGreen(Exception):
    def __init__(self, test_id: str, detail: str):
        super().__init__(f"{test_id} does not pass on the unmutated program: {detail}")
        self.test_id = test_id


class MutationTimeout(Exception):
    pass


@dataclass
class KillMatrix:
    mutants: list[Mutant]
    tests: list[str]
    cells: dict[tuple[str, str], Cell]

    def row(self, mutant_id: str) -> dict[str, Cell]:
        return {t: self.cells[(mutant_id, t)] for t in self.tests}

    def killed_by(self, test_id: str) -> set[str]:
        return {m.id for m in self.mutants if self.cells[(m.id, test_id)].detects}

    def killed(self, tests: Sequence[str] | None = None) -> set[str]:
        ids = self.tests if tests is None else tests
        out: set[str] = set()
        for t in ids:
            out |= self.killed_by(t)
        return out

    def score(self, tests: Sequence[str] | None = None) -> float:
        if not self.mutants:
            return 1.0
        return len(self.killed(tests)) / len(self.mutants)

    def status(self, mutant_id: str) -> Cell:
        cells = set(self.row(mutant_id).values())
        for c in (Cell.KILLED, Cell.TIMED_OUT, Cell.SURVIVED):
            if c in cells:
                return c
        return Cell.NOT_COVERED

    def restrict(self, tests: Sequence[str]) -> KillMatrix:
        keep = [t for t in self.tests if t in set(tests)]
        return KillMatrix(self.mutants, keep, {(m.id, t): self.cells[(m.id, t)] for m in self.mutants for t in keep})

    def to_json(self, suite: str) -> dict:
        killed = self.killed()
        report = {
            "schema": 1,
            "suite": suite,
            "mutants": [
                {**m.to_json(), "status": self.status(m.id).value,
                 "killed_by": [t for t in self.tests if self.cells[(m.id, t)].detects],
                 "cells": {t: self.cells[(m.id, t)].value for t in self.tests}}
                for m in self.mutants
            ],
            "per_test_kills": {t: sorted(self.killed_by(t)) for t in self.tests},
            "killed": len(killed),
            "total": len(self.mutants),
            "score": round(self.score(), 6),
        }
        if not self.mutants:
            report["warning"] = "no mutants; score reported as 1.0"
        return report

    @classmethod
    def from_json(cls, data: dict, mutants: Sequence[Mutant]) -> KillMatrix:
        """Rebuild a matrix from its report; ``mutants`` must be the same enumeration."""
        by_id = {m.id: m for m in mutants}
        rows = data["mutants"]
        if [r["id"] for r in rows] != [m.id for m in mutants] or any(
            by_id[r["id"]].to_json() != {k: r[k] for k in by_id[r["id"]].to_json()} for r in rows
        ):
            raise ValueError("report was produced from a different mutant enumeration")
        tests = list(data["per_test_kills"])
        cells = {(r["id"], t): Cell(r["cells"][t]) for r in rows for t in tests}
        return cls(list(mutants), tests, cells)


@dataclass
class _Baseline:
    """Unmutated-run data for one suite test."""

    test: SuiteTest
    covered: frozenset
    steps: list[int]
    draws: Draws | None = None


def _mutant_budget(steps: int, depth: int) -> Budget:
    return Budget(max(STEP_FACTOR * steps, MIN_MUTANT_STEPS), depth)


def _baseline(program: Program, test: SuiteTest, budget: Budget) -> _Baseline:
    if isinstance(test, OriginalTest):
        fn, path = program.test(test.name)
        out = run_function_as_test(Interpreter(program, budget), fn, path)
        if out.status is not Status.PASSED:
            raise NotGreen(test.id, out.status.value)
        return _Baseline(test, out.covered, [out.steps])
    draws = draw_inputs(test.spec, test.variant, test.rng())
    record: list = []
    out = run_property(program, test, budget=budget, draws=draws, do_shrink=False, record=record)
    if out.status is not PropertyStatus.PASSED:
        raise NotGreen(test.id, out.status.value)
    covered = frozenset().union(*(r.covered for r in record))
    return _Baseline(test, covered, [r.steps for r in record], draws)


def _run_cell(program: Program, base: _Baseline, depth: int) -> Cell:
    test = base.test
    if isinstance(test, OriginalTest):
        fn, path = program.test(test.name)
        out = run_function_as_test(Interpreter(program, _mutant_budget(base.steps[0], depth)), fn, path)
        if out.status is Status.PASSED:
            return Cell.SURVIVED
        return Cell.TIMED_OUT if out.error is ErrorKind.STEP_LIMIT else Cell.KILLED
    budgets = [_mutant_budget(s, depth) for s in base.steps]
    out = run_property(program, test, draws=base.draws, budgets=budgets, do_shrink=False)
    if out.status is PropertyStatus.PASSED:
        return Cell.SURVIVED
    return Cell.TIMED_OUT if out.error == ErrorKind.STEP_LIMIT.value else Cell.KILLED


def _mutant_row(program: Program, baselines: list[_Baseline], depth: int, mutant: Mutant) -> list[Cell]:
    mutated = mutant.apply(program)
    return [
        _run_cell(mutated, b, depth) if mutant.function in b.covered else Cell.NOT_COVERED
        for b in baselines
    ]


def run_mutation_testing(
    program: Program,
    suite: Sequence[SuiteTest],
    mutants: Sequence[Mutant],
    budget: Budget = Budget(),
    *,
    jobs: int = 1,
    wall_timeout_s: float | None = None,
) -> KillMatrix:
    """Run every suite test against every mutant it covers."""
    start = time.monotonic()
    baselines = [_baseline(program, t, budget) for t in suite]
    if not mutants:
        log.warning("no mutants to run; mutation score reported as 1.0")
    worker = partial(_mutant_row, program, baselines, budget.max_call_depth)
    rows: list[list[Cell]] = []
    if jobs > 1 and len(mutants) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for row in pool.map(worker, mutants, chunksize=max(1, len(mutants) // (jobs * 4))):
                rows.append(row)
                _check_deadline(start, wall_timeout_s)
    else:
        for m in mutants:
            rows.append(worker(m))
            _check_deadline(start, wall_timeout_s)
    tests = [t.id for t in suite]
    cells = {(m.id, t): c for m, row in zip(mutants, rows) for t, c in zip(tests, row)}
    return KillMatrix(list(mutants), tests, cells)


def _check_deadline(start: float, limit: float | None) -> None:
    if limit is not None and time.monotonic() - start > limit:
        raise MutationTimeout(f"mutation testing exceeded {limit} s")


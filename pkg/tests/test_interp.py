import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import program_from
from teraliz.interp import Budget, Status, eval_call, run_suite, run_test
from teraliz.minilang.ops import ErrorKind, RuntimeFault

INT_MIN, INT_MAX = -(2**31), 2**31 - 1
ints = st.integers(INT_MIN, INT_MAX)

ARITH = program_from(
    """
fn add(a: int, b: int) -> int { return a + b; }
fn sub(a: int, b: int) -> int { return a - b; }
fn mul(a: int, b: int) -> int { return a * b; }
fn div(a: int, b: int) -> int { return a / b; }
fn rem(a: int, b: int) -> int { return a % b; }
fn neg(a: int) -> int { return -a; }
"""
)


def _wrap(x: int) -> int:
    # Independent of the implementation: let numpy do the two's-complement cast.
    return int(np.array([x], dtype=np.int64).astype(np.int32)[0])


@given(ints, ints)
def test_add_sub_mul_wrap_like_int32(a, b):
    assert eval_call(ARITH, "add", [a, b]) == _wrap(a + b)
    assert eval_call(ARITH, "sub", [a, b]) == _wrap(a - b)
    assert eval_call(ARITH, "mul", [a, b]) == _wrap(a * b)


@given(ints, ints.filter(lambda b: b != 0))
def test_division_truncates_toward_zero(a, b):
    # a / b in float64 is exact enough to truncate correctly for 32-bit operands.
    q = _wrap(math.trunc(a / b))
    assert eval_call(ARITH, "div", [a, b]) == q
    assert eval_call(ARITH, "rem", [a, b]) == _wrap(a - math.trunc(a / b) * b)


def test_overflowing_corners():
    assert eval_call(ARITH, "div", [INT_MIN, -1]) == INT_MIN
    assert eval_call(ARITH, "rem", [INT_MIN, -1]) == 0
    assert eval_call(ARITH, "neg", [INT_MIN]) == INT_MIN
    assert eval_call(ARITH, "div", [-7, 2]) == -3
    assert eval_call(ARITH, "rem", [-7, 2]) == -1


@pytest.mark.parametrize("fn,kind", [("div", ErrorKind.DIV_BY_ZERO), ("rem", ErrorKind.MOD_BY_ZERO)])
def test_zero_divisor_faults(fn, kind):
    with pytest.raises(RuntimeFault) as info:
        eval_call(ARITH, fn, [1, 0])
    assert info.value.kind is kind and info.value.catchable


def test_step_limit_and_call_depth():
    p = program_from(
        "fn spin() -> int { while true { } return 0; }\n"
        "fn down(n: int) -> int { return down(n + 1); }"
    )
    with pytest.raises(RuntimeFault) as info:
        eval_call(p, "spin", [], Budget(max_steps=1000))
    assert info.value.kind is ErrorKind.STEP_LIMIT and not info.value.catchable
    with pytest.raises(RuntimeFault) as info:
        eval_call(p, "down", [0], Budget(max_call_depth=50))
    assert info.value.kind is ErrorKind.CALL_DEPTH


def test_short_circuit_skips_right_operand():
    p = program_from("fn f(a: int) -> bool { return a == 0 || 10 / a > 1; }")
    assert eval_call(p, "f", [0]) is True
    assert eval_call(p, "f", [3]) is True
    assert eval_call(p, "f", [20]) is False


def test_trace_records_guards_short_circuits_and_divisors():
    p = program_from("fn f(a: int, b: int) -> int { if a > 0 && b / a > 1 { return 1; } return 0; }")
    trace = []
    eval_call(p, "f", [2, 10], trace=trace)
    assert [(kind, taken) for _, _, kind, taken in trace] == [
        ("Binary", True),  # left of &&
        ("Binary", True),  # divisor a != 0
        ("If", True),
    ]
    trace = []
    eval_call(p, "f", [-1, 10], trace=trace)
    assert [(kind, taken) for _, _, kind, taken in trace] == [("Binary", False), ("If", False)]


TESTS = """
#[test]
fn passes() { assert_eq(3, add(1, 2)); assert_true(add(0, 0) == 0); }

#[test]
fn fails_second() { assert_eq(3, add(1, 2)); assert_false(add(1, 1) == 2); }

#[test]
fn errors() { assert_eq(0, div(1, 0)); }

#[test]
fn throws_ok() { assert_throws(DivByZero) { div(1, 0); } assert_throws { rem(1, 0); } }

#[test]
fn throws_wrong_kind() { assert_throws(ModByZero) { div(1, 0); } }

#[test]
fn throws_nothing() { assert_throws { div(1, 1); } }

#[repeated(5)]
fn repeated() { assert_eq(2, add(1, 1)); }
"""


def test_suite_outcomes():
    p = program_from(
        "fn add(a: int, b: int) -> int { return a + b; }\n"
        "fn div(a: int, b: int) -> int { return a / b; }\n"
        "fn rem(a: int, b: int) -> int { return a % b; }",
        TESTS,
    )
    by_name = {o.name: o for o in run_suite(p)}
    assert by_name["passes"].status is Status.PASSED
    failed = by_name["fails_second"]
    assert (failed.status, failed.assertion_index, failed.expected, failed.actual) == (Status.FAILED, 1, False, True)
    assert by_name["errors"].status is Status.ERRORED and by_name["errors"].error is ErrorKind.DIV_BY_ZERO
    assert by_name["throws_ok"].status is Status.PASSED
    wrong = by_name["throws_wrong_kind"]
    assert (wrong.status, wrong.expected, wrong.actual) == (Status.FAILED, "ModByZero", "DivByZero")
    assert by_name["throws_nothing"].status is Status.FAILED
    assert by_name["repeated"].status is Status.PASSED
    assert by_name["passes"].covered == frozenset({"passes", "add"})


def test_repeated_test_runs_once():
    impl = "fn add(a: int, b: int) -> int { return a + b; }"
    body = "fn t() { assert_eq(2, add(1, 1)); }"
    repeated = program_from(impl, "#[repeated(5)]\n" + body)
    once = program_from(impl, "#[test]\n" + body)
    assert run_test(repeated, "t").steps == run_test(once, "t").steps


def test_bonus_running_example_values(corpus):
    p = corpus("bonus")
    assert [eval_call(p, "calculate", a) for a in ([2500, 1000], [1500, 1000], [500, 1000])] == [250, 75, 0]
    assert all(o.status is Status.PASSED for o in run_suite(p))


def test_budget_rejects_nonpositive_limits():
    with pytest.raises(ValueError):
        Budget(max_steps=0)

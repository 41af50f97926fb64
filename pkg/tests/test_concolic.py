import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import program_from
from teraliz.analyzer import analyze_assertions, filter_tests
from teraliz.concolic import (
    Const,
    ErrorOutcome,
    ExtractionFailure,
    ExtractionLimits,
    FailureCause,
    Param,
    PathSpec,
    SymBinary,
    SymUnary,
    eval_sym,
    extract_from_values,
    extract_spec,
    negate,
    parse_sym,
    render,
)
from teraliz.interp import eval_call, run_suite
from teraliz.minilang.nodes import Type
from teraliz.minilang.ops import ErrorKind, RuntimeFault

X = Param(0, "x", Type.INT)
Y = Param(1, "y", Type.INT)
B = Param(2, "flag", Type.BOOL)

int_terms = st.recursive(
    st.one_of(st.sampled_from([X, Y]), st.integers(-(2**31), 2**31 - 1).map(Const)),
    lambda t: st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "%"]), t, t).map(lambda a: SymBinary(*a)),
        t.map(lambda e: SymUnary("-", e)),
    ),
    max_leaves=8,
)
bool_terms = st.one_of(
    st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), int_terms, int_terms).map(lambda a: SymBinary(*a)),
    st.just(B),
)


def _spec(args, gen, **kw):
    return extract_from_values(_SAMPLES, kw.pop("fn"), args, gen, **kw)


_SAMPLES = program_from(
    """
fn pick(x: int, y: int) -> int {
    if x > y { return x - y; }
    return y * 2;
}
fn guard(x: int, flag: bool) -> int {
    if flag && x != 0 { return 100 / x; }
    return 0;
}
fn div(a: int, b: int) -> int { return a / b; }
fn spin(n: int) -> int {
    let i = 0;
    while i < n { i = i + 1; }
    return i;
}
fn deep(n: int) -> int {
    if n <= 0 { return 0; }
    return 1 + deep(n - 1);
}
fn grow(x: int) -> int {
    let y = x;
    let i = 0;
    while i < 20 { y = y * y + y; i = i + 1; }
    return y;
}
fn nothing(x: int) { let y = x; }
"""
)


@given(bool_terms)
def test_render_parse_round_trip(c):
    assert parse_sym(render(c), [X, Y, B]) == c


@given(bool_terms, st.integers(-50, 50), st.integers(-50, 50), st.booleans())
def test_negate_is_logical_complement(c, x, y, flag):
    env = {0: x, 1: y, 2: flag}
    try:
        value = eval_sym(c, env)
    except RuntimeFault:
        return
    assert eval_sym(negate(c), env) is (not value)


@given(int_terms, st.integers(-(2**31), 2**31 - 1), st.integers(-(2**31), 2**31 - 1))
def test_eval_sym_agrees_with_interpreter(e, x, y):
    program = program_from(f"fn f(x: int, y: int) -> int {{ return {render(e)}; }}")
    try:
        expected = eval_call(program, "f", [x, y])
    except RuntimeFault as fault:
        with pytest.raises(RuntimeFault) as info:
            eval_sym(e, {0: x, 1: y})
        assert info.value.kind is fault.kind
        return
    assert eval_sym(e, {0: x, 1: y}) == expected


def test_negate_flips_comparisons_and_drops_double_not():
    c = SymBinary("<", X, Y)
    assert negate(c) == SymBinary(">=", X, Y)
    assert negate(SymUnary("!", B)) == B
    assert negate(B) == SymUnary("!", B)


def test_bonus_specs_through_extract_spec(corpus):
    program = corpus("bonus")
    tests = filter_tests(run_suite(program), program)
    specs = [extract_spec(program, a.mut) for a in analyze_assertions(program, tests)]
    assert [s.rendered_outcome() for s in specs] == ["sales / 10", "sales / 20", "0"]
    assert [s.concrete_outcome for s in specs] == [250, 75, 0]
    assert all(s.mut.fn_name == "calculate" for s in specs)


def test_branches_on_concrete_values_are_not_recorded():
    spec = _spec([5, 1], [0], fn="pick")
    assert spec.rendered_pc() == ["x > 1"]
    assert spec.rendered_outcome() == "x - 1"
    assert spec.concrete_inputs == (5, 1)


def test_short_circuit_records_each_evaluated_operand():
    taken = _spec([4, True], [0, 1], fn="guard")
    assert taken.rendered_pc() == ["flag", "x != 0", "x != 0"]
    skipped = _spec([4, False], [0, 1], fn="guard")
    assert skipped.rendered_pc() == ["!flag"]
    assert skipped.rendered_outcome() == "0"


def test_divisor_constraints():
    ok = _spec([7, 2], [0, 1], fn="div")
    assert ok.rendered_pc() == ["b != 0"]
    err = _spec([7, 0], [0, 1], fn="div", expect_error=True)
    assert err.rendered_pc() == ["b == 0"]
    assert err.outcome == ErrorOutcome(ErrorKind.DIV_BY_ZERO)


def test_outcome_mismatch_with_expectation_fails():
    assert _spec([7, 0], [0, 1], fn="div").cause is FailureCause.ENGINE_ERROR
    assert _spec([7, 2], [0, 1], fn="div", expect_error=True).cause is FailureCause.ENGINE_ERROR
    assert _spec([1], [0], fn="nothing").cause is FailureCause.ENGINE_ERROR


def test_loop_unrolls_into_path_condition():
    spec = _spec([2], [0], fn="spin")
    assert spec.rendered_pc() == ["0 < n", "1 < n", "2 >= n"]
    assert spec.rendered_outcome() == "2"


@pytest.mark.parametrize(
    "fn,args,limits,cause",
    [
        ("deep", [500], ExtractionLimits(), FailureCause.DEPTH),
        ("spin", [1000], ExtractionLimits(max_steps=100), FailureCause.BUDGET),
        ("grow", [3], ExtractionLimits(), FailureCause.SPEC_SIZE),
        ("spin", [200], ExtractionLimits(max_pc_chars=50), FailureCause.SPEC_SIZE),
    ],
)
def test_resource_limits(fn, args, limits, cause):
    result = extract_from_values(_SAMPLES, fn, args, [0], limits)
    assert isinstance(result, ExtractionFailure) and result.cause is cause


def test_seed_satisfies_own_pc_and_reproduces_outcome(corpus):
    program = corpus("mixed")
    spec = extract_from_values(program, "clamp", [-3, 0, 10], [0, 1, 2])
    assert isinstance(spec, PathSpec)
    assert spec.satisfied_by(dict(enumerate(spec.seed)))
    assert eval_sym(spec.outcome.expr, dict(enumerate(spec.seed))) == eval_call(program, "clamp", [-3, 0, 10])


def test_limits_validation():
    with pytest.raises(ValueError):
        ExtractionLimits(max_steps=0)

import pytest
from hypothesis import given
from hypothesis import strategies as st

from teraliz.minilang.nodes import SourceFile
from teraliz.mutation import Cell, KillMatrix, Mutant, Operator
from teraliz.reducer import MatrixMismatch, final_kills, reduce

_SRC = SourceFile("src/x.ml", ())


def mutants(n: int) -> list[Mutant]:
    return [Mutant(f"m{i:03d}", Operator.MATH, "src/x.ml", "f", i + 1, 1, "a + b -> a - b", _SRC) for i in range(n)]


def matrix(ms: list[Mutant], kills: dict[str, set[int]]) -> KillMatrix:
    cells = {
        (m.id, t): Cell.KILLED if i in ks else Cell.SURVIVED for t, ks in kills.items() for i, m in enumerate(ms)
    }
    return KillMatrix(ms, list(kills), cells)


def test_retains_only_generalized_tests_with_new_kills():
    ms = mutants(4)
    original = matrix(ms, {"t1": {0, 1}})
    variant = matrix(ms, {"v/t1#0": {0, 1}, "v/t1#1": {0, 2}})
    d = reduce(original, variant, {"t1": ["t1#0", "t1#1"]}, {}, "v")
    assert d.retained == {"v/t1#1": ["m002"]}
    assert d.new_kills == ["m002"]
    assert d.score_before == 0.5 and d.score_after == 0.75


def test_duplicate_new_kills_keep_one_test():
    ms = mutants(3)
    original = matrix(ms, {"t1": {0}})
    variant = matrix(ms, {"v/a#0": {1}, "v/b#0": {1}, "v/c#0": {1, 2}})
    d = reduce(original, variant, {"t1": ["t1#0"]}, {}, "v")
    assert list(d.retained) == ["v/c#0"]


def test_fully_generalized_original_removed_when_compensated():
    ms = mutants(3)
    original = matrix(ms, {"t1": {0}, "t2": {1}})
    variant = matrix(ms, {"v/t1#0": {0, 2}})
    passing = {"t1#0": "v/t1#0"}
    d = reduce(original, variant, {"t1": ["t1#0"], "t2": ["t2#0"]}, passing, "v")
    assert d.removed_originals == ["t1"]
    assert d.final_suite == ["t2", "v/t1#0"]
    assert final_kills(original, variant, ["t2"], ["v/t1#0"]) == {"m000", "m001", "m002"}


def test_removal_blocked_when_kills_would_be_lost():
    ms = mutants(2)
    original = matrix(ms, {"t1": {0}})
    variant = matrix(ms, {"v/t1#0": {0}})  # no new kill, so it is not retained
    d = reduce(original, variant, {"t1": ["t1#0"]}, {"t1#0": "v/t1#0"}, "v")
    assert d.removed_originals == [] and d.kept_for_kills == ["t1"]
    assert d.score_after == d.score_before


def test_partially_generalized_or_assertion_free_tests_stay():
    ms = mutants(2)
    original = matrix(ms, {"t1": set(), "t2": set()})
    variant = matrix(ms, {"v/t1#0": {0}})
    d = reduce(original, variant, {"t1": ["t1#0", "t1#1"], "t2": []}, {"t1#0": "v/t1#0"}, "v")
    assert d.removed_originals == []


def test_mismatched_mutants_raise():
    original = matrix(mutants(2), {"t1": set()})
    variant = matrix(mutants(3), {"v/t1#0": set()})
    with pytest.raises(MatrixMismatch):
        reduce(original, variant, {}, {}, "v")


def test_report_fields():
    ms = mutants(1)
    d = reduce(matrix(ms, {"t": set()}), matrix(ms, {"v/t#0": {0}}), {"t": ["t#0"]}, {"t#0": "v/t#0"}, "v")
    assert set(d.to_json()) >= {"schema", "retained", "removed_originals", "score_before", "score_after", "new_kills"}


@st.composite
def scenarios(draw):
    n = draw(st.integers(1, 8))
    ms = mutants(n)
    kill_sets = st.sets(st.integers(0, n - 1), max_size=n)
    originals = [f"t{i}" for i in range(draw(st.integers(1, 4)))]
    by_test = {t: [f"{t}#{k}" for k in range(draw(st.integers(0, 2)))] for t in originals}
    all_ids = [a for ids in by_test.values() for a in ids]
    generalized = draw(st.lists(st.sampled_from(all_ids), unique=True)) if all_ids else []
    original = matrix(ms, {t: draw(kill_sets) for t in originals})
    variant = matrix(ms, {f"v/{a}": draw(kill_sets) for a in generalized})
    passing = {a: f"v/{a}" for a in generalized}
    return original, variant, by_test, passing


@given(scenarios())
def test_reduction_guarantees(scenario):
    original, variant, by_test, passing = scenario
    d = reduce(original, variant, by_test, passing, "v")
    kept = [t for t in original.tests if t not in d.removed_originals]
    gts = list(d.retained)
    final = final_kills(original, variant, kept, gts)
    assert final >= original.killed()
    for gt in gts:
        without = final_kills(original, variant, kept, [g for g in gts if g != gt])
        assert (final - without) - original.killed()
    assert final_kills(original, variant, original.tests, gts) == final
    for t in d.removed_originals:
        assert by_test[t] and all(a in passing for a in by_test[t])

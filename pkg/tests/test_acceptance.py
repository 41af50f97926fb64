"""One test per acceptance criterion; the terminal summary prints a PASS/FAIL line for each."""
import filecmp
import itertools
import json
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from conftest import CORPUS, PROJECTS
from teraliz.analyzer import analyze_assertions, filter_tests
from teraliz.cli import main
from teraliz.concolic import Param, PathSpec, ValueOutcome, eval_sym, extract_from_values, extract_spec, parse_sym
from teraliz.generalizer import (
    GenConfig,
    InfeasibleDraw,
    PropertyStatus,
    Supplier,
    SupplierKind,
    Variant,
    build_plan,
    create_generalized_test,
    draw_inputs,
    run_property,
)
from teraliz.interp import eval_call, run_suite
from teraliz.minilang.checker import check_file
from teraliz.minilang.nodes import FileKind, Type
from teraliz.minilang.ops import RuntimeFault
from teraliz.minilang.parser import parse_file
from teraliz.minilang.program import load_project
from teraliz.mutation import OriginalTest, enumerate_mutants, reparse_mutant, run_mutation_testing
from teraliz.pipeline import Config, passing_generalized, read_report, run_pipeline
from teraliz.rng import stream

GOLDEN = Path(__file__).parent / "golden" / "bonus_mutants.json"


@contextmanager
def within(seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    print(f"elapsed {elapsed:.3f} s (limit {seconds} s)")
    assert elapsed < seconds, f"took {elapsed:.2f} s, limit {seconds} s"


def _muts(program):
    return analyze_assertions(program, filter_tests(run_suite(program), program))


@pytest.mark.criterion(1, "bonus project yields exactly the three expected specifications (< 1 s)")
def test_running_example_specifications():
    with within(1.0):
        program = load_project(CORPUS / "bonus")
        specs = [extract_spec(program, a.mut) for a in _muts(program)]
    got = {(tuple(s.rendered_pc()), s.rendered_outcome()) for s in specs}
    assert len(specs) == 3
    assert got == {
        (("sales / 2 >= target",), "sales / 10"),
        (("sales / 2 < target", "sales >= target"), "sales / 20"),
        (("sales / 2 < target", "sales < target"), "0"),
    }


@pytest.mark.criterion(2, "abs mutant survives the unit test, every generalized variant kills it with x = 1 (< 1 s)")
def test_regression_detection_on_abs():
    with within(1.0):
        program = load_project(CORPUS / "abs")
        mutant = enumerate_mutants(program)[0]
        assert mutant.description == "if x >= 0 -> if false"
        mutated = mutant.apply(program)
        assert all(o.status.value == "Passed" for o in run_suite(mutated))
        [a] = _muts(program)
        spec = extract_spec(program, a.mut)
        for kind, tries in itertools.product((SupplierKind.NAIVE, SupplierKind.IMPROVED), (10, 50, 200)):
            gt = create_generalized_test(program, a.mut, spec, Variant(kind, tries), rng_seed=0)
            assert run_property(program, gt).status is PropertyStatus.PASSED
            out = run_property(mutated, gt)
            assert out.status is PropertyStatus.FAILED, (kind, tries)
            assert out.shrunk == (1,), (kind, tries, out)


def _run_fn(program, fn, args):
    trace: list = []
    try:
        return ("ok", eval_call(program, fn, args, trace=trace)), trace
    except RuntimeFault as fault:
        return ("err", fault.kind), trace


@pytest.mark.criterion(3, "pc membership matches branch trace and outputs over [-20,20]^arity (< 30 s)")
def test_path_exactness_by_brute_force():
    seeds = json.loads((CORPUS / "seeds.json").read_text(encoding="utf-8"))["seeds"]
    programs = {p: load_project(CORPUS / p) for p in PROJECTS}
    eligible = {
        (p, fn.name)
        for p, prog in programs.items()
        for f in prog.impl_files
        for fn in f.functions
        if sum(q.type is Type.INT for q in fn.params) <= 2 and fn.return_type is not Type.VOID
    }
    assert eligible <= {(s["project"], s["fn"]) for s in seeds}, "every eligible function needs a seed"

    violations, members = [], 0
    with within(30.0):
        for s in seeds:
            program = programs[s["project"]]
            fn = program.impl_function(s["fn"])
            ints = [i for i, q in enumerate(fn.params) if q.type is Type.INT]
            spec = extract_from_values(program, s["fn"], s["args"], ints, expect_error=s.get("expect_error", False))
            assert isinstance(spec, PathSpec), spec
            _, seed_trace = _run_fn(program, s["fn"], s["args"])
            for values in itertools.product(range(-20, 21), repeat=len(ints)):
                args = list(s["args"])
                for i, v in zip(ints, values):
                    args[i] = v
                env = dict(zip(ints, values))
                member = spec.satisfied_by(env)
                out, trace = _run_fn(program, s["fn"], args)
                if member != (trace == seed_trace):
                    violations.append((s, values, "membership"))
                if member:
                    members += 1
                    if isinstance(spec.outcome, ValueOutcome):
                        expected = ("ok", eval_sym(spec.outcome.expr, env))
                    else:
                        expected = ("err", spec.outcome.kind)
                    if out != expected:
                        violations.append((s, values, "output", expected, out))
    print(f"{len(seeds)} seeds, {members} pc members checked")
    assert violations == []


def _spec(pc: list[str], names: str, seed: tuple) -> PathSpec:
    params = tuple(Param(i, n, Type.INT) for i, n in enumerate(names))
    return PathSpec("f", seed, params, tuple(parse_sym(c, params) for c in pc), ValueOutcome(params[0]), seed[0])


RANDOM_PHASE = 10**9


@pytest.mark.criterion(4, "constraint-aware supplier: circular bounds, edge order, encoded conjuncts (< 5 s)")
def test_improved_supplier_properties():
    with within(5.0):
        circular = Supplier(_spec(["a >= b", "b >= a"], "ab", (3, 3)), SupplierKind.IMPROVED, stream(0, "circular"))
        draws = [circular.candidate(RANDOM_PHASE) for _ in range(1000)]
        assert all(a == b for a, b in draws)

        bounded = Supplier(_spec(["x >= 0", "x <= 1000"], "x", (7,)), SupplierKind.IMPROVED, stream(0, "edges"))
        assert [bounded.candidate(i) for i in range(1, 5)] == [(0,), (1,), (999,), (1000,)]

        pcs = [
            ["a >= b", "b >= a"],
            ["x >= 0", "x <= 1000"],
            ["a < b", "b <= c", "c != 5", "a > -100"],
            ["a == b", "b == c"],
            ["sales / 2 < target", "sales >= target"],
            ["b > a", "c < b", "c >= 0", "a <= 10"],
        ]
        violations = 0
        produced = infeasible = 0
        per_pc = 10_000 // len(pcs) + 1
        for n, pc in enumerate(pcs):
            names = sorted({w for c in pc for w in c.split() if w.isidentifier()}, key=lambda w: "".join(pc).index(w))
            spec = _spec(pc, names, (0,) * len(names))
            plan = build_plan(spec)
            sup = Supplier(spec, SupplierKind.IMPROVED, stream(n, "encoded"), plan=plan)
            made = 0
            while made < per_pc:
                try:
                    cand = sup.candidate(RANDOM_PHASE)
                except InfeasibleDraw:
                    # No candidate is produced; the filter counts it as a miss.
                    infeasible += 1
                    continue
                made += 1
                env = dict(enumerate(cand))
                violations += not all(eval_sym(c, env) is True for c in plan.encoded)
            produced += made
    print(f"{produced} candidates, {infeasible} infeasible draws")
    assert produced >= 10_000
    assert violations == 0


@pytest.mark.criterion(5, "chained equality: Naive runs out of misses, Improved passes with 200 tuples (< 5 s)")
def test_filter_miss_asymmetry():
    with within(5.0):
        program = load_project(CORPUS / "mixed")
        a = next(a for a in _muts(program) if a.mut.fn_name == "all_equal")
        spec = extract_spec(program, a.mut)
        assert spec.rendered_pc() == ["a == b", "b == c"]
        naive = create_generalized_test(program, a.mut, spec, Variant(SupplierKind.NAIVE, 200), rng_seed=0)
        improved = create_generalized_test(program, a.mut, spec, Variant(SupplierKind.IMPROVED, 200), rng_seed=0)
        n_out = run_property(program, naive)
        i_out = run_property(program, improved)
        i_draws = draw_inputs(spec, improved.variant, improved.rng(), GenConfig())
    assert n_out.status is PropertyStatus.TOO_MANY_FILTER_MISSES
    assert i_out.status is PropertyStatus.PASSED and i_out.tried == 200
    assert len(i_draws.tuples) == 200


def _recomputed_kills(program, originals: list[str], gts: list) -> set[str]:
    suite = [OriginalTest(t) for t in originals] + gts
    if not suite:
        return set()
    return run_mutation_testing(program, suite, enumerate_mutants(program)).killed()


@pytest.mark.criterion(6, "reduction keeps original kills, retains only needed tests, compensates removals (< 2 min)")
def test_reduction_guarantees(project_copy):
    violations = []
    with within(120.0):
        for name in PROJECTS:
            cfg = Config(project_dir=project_copy(name))
            result = run_pipeline(cfg)
            program = load_project(cfg.project_dir)
            assert len(result.decisions) == 7
            gen_report = read_report(cfg, "generalizations")
            orig_kills = result.matrices["original"].killed()
            for v, d in result.decisions.items():
                gts = {gt.id: gt for gt in passing_generalized(program, cfg, gen_report, v)}
                kept = [t for t in d.final_suite if t not in gts]
                retained = [gts[g] for g in d.retained]
                final = _recomputed_kills(program, kept, retained)
                if not final >= orig_kills:
                    violations.append((name, v, "lost kills", sorted(orig_kills - final)))
                for g in retained:
                    without = _recomputed_kills(program, kept, [o for o in retained if o is not g])
                    if not (final - without) - orig_kills:
                        violations.append((name, v, "no unique new kill", g.id))
                if _recomputed_kills(program, kept + d.removed_originals, retained) != final:
                    violations.append((name, v, "removal not compensated", d.removed_originals))
    assert violations == []


@pytest.mark.criterion(7, "bonus mutants match the golden file and every mutant re-parses and type-checks")
def test_mutation_engine_sanity():
    golden = json.loads(GOLDEN.read_text(encoding="utf-8"))
    program = load_project(CORPUS / "bonus")
    mutants = enumerate_mutants(program)
    assert [(m.operator.value, m.line, m.description) for m in mutants] == [
        (g["op"], g["line"], g["description"]) for g in golden
    ]
    for project in PROJECTS:
        program = load_project(CORPUS / project)
        for m in enumerate_mutants(program):
            sf = reparse_mutant(m, program)
            check_file(sf, [f for f in program.impl_files if f.path != m.file])


@pytest.mark.criterion(8, "two runs produce byte-identical reports; emitted tests reparse and pass")
def test_determinism_and_round_trip(project_copy, capsys):
    for name in PROJECTS:
        project = project_copy(name)
        outs = [project.parent / f"{name}-out{i}" for i in (1, 2)]
        for out in outs:
            assert main(["run", str(project), "--report", str(out), "--seed", "0"]) in (0, 2)
        reports = sorted(p.name for p in (outs[0] / "reports").iterdir())
        assert reports == sorted(p.name for p in (outs[1] / "reports").iterdir())
        match, mismatch, errors = filecmp.cmpfiles(outs[0] / "reports", outs[1] / "reports", reports, shallow=False)
        assert mismatch == [] and errors == [], (name, mismatch, errors)
        files = sorted((outs[0] / "generalized").rglob("*.ml"))
        assert [f.relative_to(outs[0]) for f in files] == [
            f.relative_to(outs[1]) for f in sorted((outs[1] / "generalized").rglob("*.ml"))
        ]
        assert all(f.read_bytes() == (outs[1] / f.relative_to(outs[0])).read_bytes() for f in files)

        program = load_project(project)
        for f in files:
            sf = parse_file(f.read_text(encoding="utf-8"), FileKind.TEST, f.name, externs=program.impl_files)
            check_file(sf, program.impl_files)
        capsys.readouterr()
        assert main(["test", str(outs[0] / "generalized")]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == len(files) and all(line.startswith("PASS ") for line in lines)

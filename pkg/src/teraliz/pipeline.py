"""Stage orchestration and the JSON report tree.

Every stage reads the reports written by earlier stages, so running the
stages one at a time gives the same outputs as a full run.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .analyzer import (
    AssertionDescriptor,
    Decision,
    MutRef,
    TestDescriptor,
    analyze_assertions,
    filter_tests,
)
from .concolic import (
    ErrorOutcome,
    ExtractionFailure,
    ExtractionLimits,
    Param,
    PathSpec,
    ValueOutcome,
    extract_spec,
    parse_sym,
)
from .generalizer import (
    GenConfig,
    GeneralizedTest,
    PropertyStatus,
    SpecTooLarge,
    Variant,
    create_generalized_test,
    generalized_path,
    load_generalized,
    run_property,
)
from .interp import Budget, TestOutcome, run_suite
from .minilang.nodes import FileKind, Type
from .minilang.ops import ErrorKind
from .minilang.parser import parse_file
from .minilang.printer import pretty_print, print_function
from .minilang.program import Program, load_project
from .mutation import KillMatrix, MutationTimeout, OriginalTest, enumerate_mutants, run_mutation_testing
from .reducer import ReductionDecision, reduce

log = logging.getLogger(__name__)

SCHEMA = 1
FAMILIES = ("baseline", "naive", "improved")
DEFAULT_OUT = "teraliz-out"


class ProjectExclusion(Exception):
    """The whole project was excluded (no usable tests, or a stage timed out)."""

    def __init__(self, cause: str):
        super().__init__(cause)
        self.cause = cause


class MissingReport(Exception):
    """A stage was run before the stage whose report it consumes."""


@dataclass(frozen=True)
class Config:
    project_dir: Path
    variants: tuple[str, ...] = FAMILIES
    tries_list: tuple[int, ...] = (10, 50, 200)
    discard_ratio: int = 5
    rng_seed: int = 0
    limits: ExtractionLimits = ExtractionLimits()
    suite_timeout_s: float = 60.0
    mutation_timeout_s: float = 300.0
    edge_bias: float = 0.25
    edge_enum_cap: int = 64
    report_dir: Path | None = None
    jobs: int = 1

    def __post_init__(self):
        if not self.tries_list or any(t <= 0 for t in self.tries_list):
            raise ValueError("tries_list must be a nonempty list of positive integers")
        if list(self.tries_list) != sorted(set(self.tries_list)):
            raise ValueError("tries_list must be strictly ascending")
        unknown = set(self.variants) - set(FAMILIES)
        if unknown or not self.variants:
            raise ValueError(f"variants must be a nonempty subset of {FAMILIES}")
        if self.discard_ratio <= 0 or not 0 <= self.edge_bias <= 1 or self.edge_enum_cap < 0:
            raise ValueError("invalid generation settings")

    @property
    def out_dir(self) -> Path:
        return Path(self.report_dir) if self.report_dir is not None else Path(self.project_dir) / DEFAULT_OUT

    @property
    def reports(self) -> Path:
        return self.out_dir / "reports"

    @property
    def gen_config(self) -> GenConfig:
        return GenConfig(self.discard_ratio, self.edge_bias, self.edge_enum_cap)

    def variant_list(self) -> list[Variant]:
        out = []
        for family in FAMILIES:
            if family not in self.variants:
                continue
            if family == "baseline":
                out.append(Variant.baseline())
            else:
                out.extend(Variant.parse(f"{family}_{t}") for t in self.tries_list)
        return out

    def to_json(self) -> dict:
        return {
            "variants": list(self.variants),
            "tries_list": list(self.tries_list),
            "discard_ratio": self.discard_ratio,
            "rng_seed": self.rng_seed,
            "limits": asdict(self.limits),
            "suite_timeout_s": self.suite_timeout_s,
            "mutation_timeout_s": self.mutation_timeout_s,
            "edge_bias": self.edge_bias,
            "edge_enum_cap": self.edge_enum_cap,
        }


# -- report i/o --------------------------------------------------------------------------


def write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def read_report(cfg: Config, name: str) -> dict:
    path = cfg.reports / f"{name}.json"
    if not path.is_file():
        raise MissingReport(f"{path} not found; run the stage that produces it first")
    return json.loads(path.read_text(encoding="utf-8"))


# -- stages 1 and 2: tests, assertions, MUTs ----------------------------------------------


@dataclass
class Analysis:
    outcomes: list[TestOutcome]
    tests: list[TestDescriptor]
    assertions: list[AssertionDescriptor]

    def exclusion(self) -> str | None:
        """Project-level exclusion cause, if any."""
        if not self.tests:
            return "no tests found"
        if not any(t.included for t in self.tests):
            return "all tests excluded"
        if not any(a.included for a in self.assertions):
            return "all assertions excluded"
        return None


def analyze(program: Program, cfg: Config) -> Analysis:
    start = time.monotonic()
    outcomes = run_suite(program, Budget(cfg.limits.max_steps, cfg.limits.max_call_depth))
    if time.monotonic() - start > cfg.suite_timeout_s:
        raise ProjectExclusion("timeout running the original suite")
    tests = filter_tests(outcomes, program)
    return Analysis(outcomes, tests, analyze_assertions(program, tests))


def write_analysis(cfg: Config, a: Analysis) -> None:
    by_name = {o.name: o for o in a.outcomes}
    write_json(
        cfg.reports / "tests.json",
        {"schema": SCHEMA, "tests": [{**t.to_json(), "outcome": by_name[t.name].to_json()} for t in a.tests]},
    )
    write_json(cfg.reports / "assertions.json", {"schema": SCHEMA, "assertions": [x.to_json() for x in a.assertions]})


def included_muts(program: Program, assertions_report: dict) -> list[MutRef]:
    return [
        MutRef.from_json(a["mut"], assertion_id=a["id"], test=a["test"], file=a["file"], program=program)
        for a in assertions_report["assertions"]
        if a["included"]
    ]


def original_suite(tests_report: dict) -> list[str]:
    """Tests that may take part in mutation testing: those in files with no non-passing test."""
    return [
        t["name"]
        for t in tests_report["tests"]
        if all(v["decision"] != Decision.REJECT.value for v in t["verdicts"] if v["filter"] == "NonPassingTest")
    ]


# -- stage 3: specifications --------------------------------------------------------------


def spec_to_json(aid: str, result: PathSpec | ExtractionFailure) -> dict:
    if isinstance(result, ExtractionFailure):
        return {"assertion_id": aid, "status": "failed", "cause": result.cause.value, "detail": result.detail}
    if isinstance(result.outcome, ErrorOutcome):
        outcome = {"kind": "error", "error": result.outcome.kind.value}
        concrete = result.concrete_outcome.value
    else:
        outcome = {"kind": "value", "expr": result.rendered_outcome()}
        concrete = result.concrete_outcome
    return {
        "assertion_id": aid,
        "status": "ok",
        "fn": result.fn_name,
        "concrete_inputs": list(result.concrete_inputs),
        "params": [{"index": p.index, "name": p.name, "type": p.type.value} for p in result.symbolic_params],
        "pc": result.rendered_pc(),
        "outcome": outcome,
        "concrete_outcome": concrete,
    }


def spec_from_json(data: dict, mut: MutRef | None = None) -> PathSpec:
    params = tuple(Param(p["index"], p["name"], Type(p["type"])) for p in data["params"])
    if data["outcome"]["kind"] == "error":
        outcome = ErrorOutcome(ErrorKind(data["outcome"]["error"]))
        concrete = ErrorKind(data["concrete_outcome"])
    else:
        outcome = ValueOutcome(parse_sym(data["outcome"]["expr"], params))
        concrete = data["concrete_outcome"]
    pc = tuple(parse_sym(c, params) for c in data["pc"])
    return PathSpec(data["fn"], tuple(data["concrete_inputs"]), params, pc, outcome, concrete, mut)


def extract(program: Program, muts: list[MutRef], cfg: Config) -> dict[str, PathSpec | ExtractionFailure]:
    return {m.assertion_id: extract_spec(program, m, cfg.limits) for m in muts}


def write_specs(cfg: Config, specs: dict[str, PathSpec | ExtractionFailure]) -> None:
    write_json(cfg.reports / "specs.json", {"schema": SCHEMA, "specs": [spec_to_json(k, v) for k, v in specs.items()]})


# -- stage 4: generalized tests ------------------------------------------------------------


@dataclass
class GenRecord:
    assertion_id: str
    variant: Variant
    status: str
    gt: GeneralizedTest | None = None
    outcome: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PropertyStatus.PASSED.value

    def to_json(self) -> dict:
        return {
            "assertion_id": self.assertion_id,
            "id": f"{self.variant.name}/{self.assertion_id}",
            "path": self.gt.source.path if self.passed else None,
            "status": self.status,
            **self.outcome,
        }


def generalize(
    program: Program, muts: list[MutRef], specs: dict[str, PathSpec], variant: Variant, cfg: Config
) -> list[GenRecord]:
    start = time.monotonic()
    records = []
    for m in muts:
        spec = specs.get(m.assertion_id)
        if spec is None:
            continue
        try:
            gt = create_generalized_test(program, m, spec, variant, cfg.rng_seed)
        except SpecTooLarge as e:
            records.append(GenRecord(m.assertion_id, variant, "SpecTooLarge", outcome={"detail": str(e)}))
            continue
        out = run_property(program, gt, cfg.gen_config, Budget(cfg.limits.max_steps, cfg.limits.max_call_depth))
        body = out.to_json()
        status = body.pop("outcome")
        records.append(GenRecord(m.assertion_id, variant, status, gt, body))
        if time.monotonic() - start > cfg.suite_timeout_s:
            raise ProjectExclusion(f"timeout generalizing for {variant.name}")
    return records


def write_generalized(cfg: Config, by_variant: dict[str, list[GenRecord]]) -> None:
    for records in by_variant.values():
        for r in records:
            if r.passed:
                path = cfg.out_dir / r.gt.source.path
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(pretty_print(r.gt.source), encoding="utf-8")
    write_json(
        cfg.reports / "generalizations.json",
        {"schema": SCHEMA, "variants": {v: [r.to_json() for r in rs] for v, rs in by_variant.items()}},
    )


def load_generalized_file(program: Program, path: Path, rel: str, rng_seed: int) -> GeneralizedTest:
    sf = parse_file(path.read_text(encoding="utf-8"), FileKind.TEST, rel, externs=program.impl_files)
    return load_generalized(program, sf, rng_seed)


def passing_generalized(program: Program, cfg: Config, gen_report: dict, variant: str) -> list[GeneralizedTest]:
    """Reload a variant's passing generalized tests from their emitted files."""
    return [
        load_generalized_file(program, cfg.out_dir / r["path"], r["path"], cfg.rng_seed)
        for r in gen_report["variants"][variant]
        if r["status"] == PropertyStatus.PASSED.value
    ]


# -- stage 5: mutation testing and reduction ---------------------------------------------------


def mutate(program: Program, cfg: Config, suite: list, label: str) -> KillMatrix:
    try:
        km = run_mutation_testing(
            program,
            suite,
            enumerate_mutants(program),
            Budget(cfg.limits.max_steps, cfg.limits.max_call_depth),
            jobs=cfg.jobs,
            wall_timeout_s=cfg.mutation_timeout_s,
        )
    except MutationTimeout as e:
        raise ProjectExclusion(f"timeout in mutation testing of {label}: {e}") from None
    write_json(cfg.reports / f"mutation_{label}.json", km.to_json(label))
    return km


def run_mutate_stage(program: Program, cfg: Config) -> dict[str, KillMatrix]:
    tests_report = read_report(cfg, "tests")
    out = {"original": mutate(program, cfg, [OriginalTest(t) for t in original_suite(tests_report)], "original")}
    gen_path = cfg.reports / "generalizations.json"
    if gen_path.is_file():
        gen_report = read_report(cfg, "generalizations")
        for v in gen_report["variants"]:
            out[v] = mutate(program, cfg, passing_generalized(program, cfg, gen_report, v), v)
    return out


def run_reduce_stage(program: Program, cfg: Config) -> dict[str, ReductionDecision]:
    assertions = read_report(cfg, "assertions")["assertions"]
    gen_report = read_report(cfg, "generalizations")
    mutants = enumerate_mutants(program)
    original = KillMatrix.from_json(read_report(cfg, "mutation_original"), mutants)
    by_test: dict[str, list[str]] = {}
    for a in assertions:
        by_test.setdefault(a["test"], []).append(a["id"])
    decisions = {}
    for v, records in gen_report["variants"].items():
        variant = KillMatrix.from_json(read_report(cfg, f"mutation_{v}"), mutants)
        passing = {r["assertion_id"]: r["id"] for r in records if r["status"] == PropertyStatus.PASSED.value}
        d = reduce(original, variant, by_test, passing, v)
        write_json(cfg.reports / f"reduction_{v}.json", d.to_json())
        decisions[v] = d
    rows = summary_rows(program, cfg, original, decisions)
    write_json(cfg.reports / "summary.json", {"schema": SCHEMA, "rows": rows})
    return decisions


def _loc(text: str) -> int:
    return sum(1 for line in text.splitlines() if line.strip())


def _gt_path(gt_id: str) -> str:
    variant, _, aid = gt_id.partition("/")
    return generalized_path(Variant.parse(variant), aid)


def summary_rows(
    program: Program, cfg: Config, original: KillMatrix, decisions: dict[str, ReductionDecision]
) -> list[dict]:
    orig_loc = {t: _loc(print_function(program.test(t)[0])) for t in original.tests}
    rows = []
    for v, d in decisions.items():
        gt_loc = sum(_loc((cfg.out_dir / _gt_path(gt)).read_text(encoding="utf-8")) for gt in d.retained)
        kept = [t for t in original.tests if t not in d.removed_originals]
        rows.append({
            "variant": v,
            "tests_before": len(original.tests),
            "tests_after": len(d.final_suite),
            "loc_before": sum(orig_loc.values()),
            "loc_after": sum(orig_loc[t] for t in kept) + gt_loc,
            "score_before": round(d.score_before, 6),
            "score_after": round(d.score_after, 6),
        })
    return rows


def format_summary(rows: list[dict]) -> str:
    head = ("variant", "tests", "loc", "score")
    lines = [f"{head[0]:<14} {head[1]:>9} {head[2]:>11} {head[3]:>15}"]
    for r in rows:
        lines.append(
            f"{r['variant']:<14} {r['tests_before']:>4}->{r['tests_after']:<4} "
            f"{r['loc_before']:>5}->{r['loc_after']:<5} "
            f"{r['score_before']:>7.1%}->{r['score_after']:<7.1%}"
        )
    return "\n".join(lines)


# -- full pipeline ------------------------------------------------------------------------


@dataclass
class PipelineResult:
    analysis: Analysis
    specs: dict
    generalizations: dict[str, list[GenRecord]]
    matrices: dict[str, KillMatrix]
    decisions: dict[str, ReductionDecision]
    summary: list[dict]
    timings: dict[str, float]

    @property
    def has_exclusions(self) -> bool:
        return (
            not all(t.included for t in self.analysis.tests)
            or not all(a.included for a in self.analysis.assertions)
            or any(isinstance(s, ExtractionFailure) for s in self.specs.values())
            or any(not r.passed for rs in self.generalizations.values() for r in rs)
        )


def write_metadata(cfg: Config, timings: dict[str, float], **extra) -> None:
    write_json(
        cfg.out_dir / "metadata.json",
        {
            "version": __version__,
            "project": str(Path(cfg.project_dir).resolve()),
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "config": cfg.to_json(),
            "timings_s": {k: round(v, 4) for k, v in timings.items()},
            **extra,
        },
    )


def run_pipeline(cfg: Config) -> PipelineResult:
    """Run all five stages, writing the report tree under ``cfg.out_dir``.

    Raises :class:`ProjectExclusion` after writing the reports produced so far.
    """
    timings: dict[str, float] = {}
    clock = time.monotonic()

    def lap(name: str) -> None:
        nonlocal clock
        now = time.monotonic()
        timings[name] = now - clock
        clock = now

    program = load_project(cfg.project_dir)
    try:
        analysis = analyze(program, cfg)
        write_analysis(cfg, analysis)
        lap("analyze")
        cause = analysis.exclusion()
        if cause:
            raise ProjectExclusion(cause)

        muts = included_muts(program, read_report(cfg, "assertions"))
        specs = extract(program, muts, cfg)
        write_specs(cfg, specs)
        lap("extract")

        specs_ok = {
            s["assertion_id"]: spec_from_json(s) for s in read_report(cfg, "specs")["specs"] if s["status"] == "ok"
        }
        gens = {v.name: generalize(program, muts, specs_ok, v, cfg) for v in cfg.variant_list()}
        write_generalized(cfg, gens)
        lap("generalize")

        matrices = run_mutate_stage(program, cfg)
        lap("mutate")
        decisions = run_reduce_stage(program, cfg)
        lap("reduce")
    except ProjectExclusion as e:
        lap("aborted")
        write_metadata(cfg, timings, exclusion=e.cause)
        raise
    write_metadata(cfg, timings)
    summary = read_report(cfg, "summary")["rows"]
    return PipelineResult(analysis, specs, gens, matrices, decisions, summary, timings)

"""Command-line entry point: ``teraliz run`` and the per-stage subcommands."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .generalizer import PropertyStatus, run_property
from .minilang.errors import MiniLangError
from .minilang.program import load_project
from .pipeline import (
    DEFAULT_OUT,
    FAMILIES,
    Analysis,
    Config,
    MissingReport,
    ProjectExclusion,
    analyze,
    extract,
    format_summary,
    generalize,
    included_muts,
    load_generalized_file,
    read_report,
    run_mutate_stage,
    run_pipeline,
    run_reduce_stage,
    spec_from_json,
    write_analysis,
    write_generalized,
    write_metadata,
    write_specs,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXCLUSIONS = 2
EXIT_PROJECT_EXCLUDED = 3
EXIT_MISSING_REPORT = 4


def _tries(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def _variants(text: str) -> tuple[str, ...]:
    names = tuple(v for v in text.replace(",", " ").split() if v)
    bad = [v for v in names if v not in FAMILIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown variant(s) {bad}; choose from {', '.join(FAMILIES)}")
    return names


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("project", type=Path, help="directory holding src/ and tests/")
    p.add_argument("--report", type=Path, default=None, help=f"output directory (default <project>/{DEFAULT_OUT})")
    p.add_argument("--seed", type=int, default=0, help="pipeline RNG seed (TERALIZ_SEED overrides)")
    p.add_argument("--variants", type=_variants, default=FAMILIES, help="subset of baseline,naive,improved")
    p.add_argument("--tries", type=_tries, default=(10, 50, 200), help="ascending tries values, e.g. 10,50,200")
    p.add_argument("--discard-ratio", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for mutation testing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teraliz", description="Generalize MiniLang unit tests into property tests.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("run", "run all stages"),
        ("analyze", "run the suite, filter tests and assertions, identify MUTs"),
        ("extract", "extract path specifications"),
        ("generalize", "create and run generalized tests"),
        ("mutate", "mutation testing for the original and generalized suites"),
        ("reduce", "select the final suite per variant"),
    ]:
        _common(sub.add_parser(name, help=text))
    t = sub.add_parser("test", help="run emitted generalized test files against a project")
    t.add_argument("paths", nargs="+", type=Path, help="generalized .ml files or directories")
    t.add_argument("--project", type=Path, default=None, help="project directory (default: from the report metadata)")
    t.add_argument("--seed", type=int, default=0)
    return parser


def _seed(args) -> int:
    env = os.environ.get("TERALIZ_SEED")
    return int(env) if env not in (None, "") else args.seed


def config_from_args(args) -> Config:
    return Config(
        project_dir=args.project,
        variants=tuple(args.variants),
        tries_list=tuple(args.tries),
        discard_ratio=args.discard_ratio,
        rng_seed=_seed(args),
        report_dir=args.report,
        jobs=args.jobs,
    )


def _analysis_exclusions(a: Analysis) -> bool:
    return not all(t.included for t in a.tests) or not all(x.included for x in a.assertions)


def cmd_run(cfg: Config) -> int:
    result = run_pipeline(cfg)
    print(format_summary(result.summary))
    print(f"reports written to {cfg.out_dir}")
    return EXIT_EXCLUSIONS if result.has_exclusions else EXIT_OK


def cmd_analyze(cfg: Config) -> int:
    a = analyze(load_project(cfg.project_dir), cfg)
    write_analysis(cfg, a)
    write_metadata(cfg, {}, stage="analyze")
    cause = a.exclusion()
    if cause:
        raise ProjectExclusion(cause)
    included = sum(x.included for x in a.assertions)
    print(f"{len(a.tests)} tests, {included}/{len(a.assertions)} assertions included")
    return EXIT_EXCLUSIONS if _analysis_exclusions(a) else EXIT_OK


def cmd_extract(cfg: Config) -> int:
    program = load_project(cfg.project_dir)
    specs = extract(program, included_muts(program, read_report(cfg, "assertions")), cfg)
    write_specs(cfg, specs)
    ok = sum(1 for s in specs.values() if hasattr(s, "pc"))
    print(f"{ok}/{len(specs)} specifications extracted")
    return EXIT_OK if ok == len(specs) else EXIT_EXCLUSIONS


def cmd_generalize(cfg: Config) -> int:
    program = load_project(cfg.project_dir)
    muts = included_muts(program, read_report(cfg, "assertions"))
    by_id = {m.assertion_id: m for m in muts}
    specs = {
        s["assertion_id"]: spec_from_json(s, by_id.get(s["assertion_id"]))
        for s in read_report(cfg, "specs")["specs"]
        if s["status"] == "ok"
    }
    gens = {v.name: generalize(program, muts, specs, v, cfg) for v in cfg.variant_list()}
    write_generalized(cfg, gens)
    failed = 0
    for name, records in gens.items():
        passed = sum(r.passed for r in records)
        failed += len(records) - passed
        print(f"{name:<14} {passed}/{len(records)} generalized tests passed")
    return EXIT_EXCLUSIONS if failed else EXIT_OK


def cmd_mutate(cfg: Config) -> int:
    for label, km in run_mutate_stage(load_project(cfg.project_dir), cfg).items():
        print(f"{label:<14} {len(km.killed())}/{len(km.mutants)} mutants killed ({km.score():.1%})")
    return EXIT_OK


def cmd_reduce(cfg: Config) -> int:
    run_reduce_stage(load_project(cfg.project_dir), cfg)
    print(format_summary(read_report(cfg, "summary")["rows"]))
    return EXIT_OK


def _find_project(path: Path) -> Path | None:
    for d in [path, *path.resolve().parents]:
        meta = d / "metadata.json"
        if meta.is_file():
            return Path(json.loads(meta.read_text(encoding="utf-8"))["project"])
    return None


def _out_root(path: Path) -> Path:
    """Directory the ``generalized/...`` relative paths are anchored at."""
    parts = path.resolve().parts
    if "generalized" in parts:
        i = len(parts) - 1 - parts[::-1].index("generalized")
        return Path(*parts[:i])
    return path.resolve().parent


def cmd_test(args) -> int:
    files: list[Path] = []
    for p in args.paths:
        files.extend(sorted(p.rglob("*.ml")) if p.is_dir() else [p])
    if not files:
        print("no generalized test files found", file=sys.stderr)
        return EXIT_PROJECT_EXCLUDED
    project = args.project or _find_project(files[0])
    if project is None:
        print("cannot determine the project; pass --project", file=sys.stderr)
        return EXIT_MISSING_REPORT
    program = load_project(project)
    seed = _seed(args)
    failures = 0
    for f in files:
        rel = f.resolve().relative_to(_out_root(f)).as_posix()
        gt = load_generalized_file(program, f, rel, seed)
        out = run_property(program, gt)
        ok = out.status is PropertyStatus.PASSED
        failures += not ok
        extra = "" if ok else f" counterexample={list(out.shrunk or out.counterexample or [])}"
        print(f"{'PASS' if ok else 'FAIL'} {rel} [{out.status.value}, {out.tried} tries]{extra}")
    return EXIT_OK if failures == 0 else EXIT_ERROR


COMMANDS = {
    "run": cmd_run,
    "analyze": cmd_analyze,
    "extract": cmd_extract,
    "generalize": cmd_generalize,
    "mutate": cmd_mutate,
    "reduce": cmd_reduce,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "test":
            return cmd_test(args)
        return COMMANDS[args.command](config_from_args(args))
    except ProjectExclusion as e:
        print(f"project excluded: {e.cause}", file=sys.stderr)
        return EXIT_PROJECT_EXCLUDED
    except MissingReport as e:
        print(f"missing prerequisite: {e}", file=sys.stderr)
        return EXIT_MISSING_REPORT
    except (MiniLangError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

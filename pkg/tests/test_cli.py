import filecmp
import json
from pathlib import Path

import pytest

from teraliz.cli import main
from teraliz.pipeline import Config


def _reports(out: Path) -> dict[str, dict]:
    return {p.name: json.loads(p.read_text()) for p in sorted((out / "reports").glob("*.json"))}


def _same_tree(a: Path, b: Path) -> bool:
    cmp = filecmp.dircmp(a, b)

    def ok(c) -> bool:
        if c.left_only or c.right_only or c.funny_files:
            return False
        _, mismatch, errors = filecmp.cmpfiles(c.left, c.right, c.common_files, shallow=False)
        return not mismatch and not errors and all(ok(s) for s in c.subdirs.values())

    return ok(cmp)


def test_run_bonus_writes_report_tree(project_copy, capsys):
    root = project_copy("bonus")
    code = main(["run", str(root), "--tries", "10,50"])
    out = root / "teraliz-out"
    assert code == 2  # improved gts for testCalculate#1 run out of filter misses
    reports = _reports(out)
    assert {"tests.json", "assertions.json", "specs.json", "generalizations.json", "mutation_original.json",
            "reduction_baseline.json", "reduction_improved_50.json", "summary.json"} <= set(reports)
    assert all(r["schema"] == 1 for r in reports.values())
    specs = reports["specs.json"]["specs"]
    assert [s["pc"] for s in specs] == [
        ["sales / 2 >= target"],
        ["sales / 2 < target", "sales >= target"],
        ["sales / 2 < target", "sales < target"],
    ]
    meta = json.loads((out / "metadata.json").read_text())
    assert set(meta["timings_s"]) >= {"analyze", "extract", "generalize", "mutate", "reduce"}
    table = capsys.readouterr().out
    assert "improved_50" in table and "naive_10" in table


def test_stages_one_by_one_match_full_run(project_copy, tmp_path):
    root = project_copy("abs")
    assert main(["run", str(root), "--tries", "10", "--report", str(tmp_path / "full")]) == 0
    staged = tmp_path / "staged"
    for stage in ("analyze", "extract", "generalize", "mutate", "reduce"):
        assert main([stage, str(root), "--tries", "10", "--report", str(staged)]) == 0
    assert _same_tree(tmp_path / "full" / "reports", staged / "reports")
    assert _same_tree(tmp_path / "full" / "generalized", staged / "generalized")


def test_missing_prerequisite_exits_4(project_copy, capsys):
    root = project_copy("abs")
    assert main(["mutate", str(root)]) == 4
    assert main(["reduce", str(root)]) == 4
    assert main(["extract", str(root)]) == 4
    assert "missing prerequisite" in capsys.readouterr().err


def test_only_failing_test_excludes_project(tmp_path, capsys):
    (tmp_path / "src").mkdir()
    (tmp_path / "tests").mkdir()
    (tmp_path / "src" / "f.ml").write_text("fn f(x: int) -> int { return x; }\n")
    (tmp_path / "tests" / "test_f.ml").write_text("#[test]\nfn t() { assert_eq(2, f(1)); }\n")
    assert main(["run", str(tmp_path)]) == 3
    assert "all tests excluded" in capsys.readouterr().err


def test_no_tests_excludes_project(tmp_path, capsys):
    (tmp_path / "src").mkdir()
    (tmp_path / "tests").mkdir()
    (tmp_path / "src" / "f.ml").write_text("fn f(x: int) -> int { return x; }\n")
    assert main(["run", str(tmp_path)]) == 3
    assert "no tests found" in capsys.readouterr().err


def test_seed_environment_override(project_copy, monkeypatch):
    root = project_copy("abs")
    monkeypatch.setenv("TERALIZ_SEED", "7")
    assert main(["analyze", str(root), "--seed", "1"]) == 0
    meta = json.loads((root / "teraliz-out" / "metadata.json").read_text())
    assert meta["config"]["rng_seed"] == 7


def test_test_command_runs_emitted_files(project_copy, capsys):
    root = project_copy("abs")
    main(["run", str(root), "--tries", "10"])
    capsys.readouterr()
    assert main(["test", str(root / "teraliz-out" / "generalized")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and all(line.startswith("PASS") for line in lines)


def test_bad_options(project_copy, capsys):
    root = project_copy("abs")
    assert main(["run", str(root), "--tries", "50,10"]) == 1
    with pytest.raises(SystemExit):
        main(["run", str(root), "--variants", "fancy"])


def test_config_defaults():
    cfg = Config(Path("p"))
    assert cfg.tries_list == (10, 50, 200) and cfg.discard_ratio == 5 and cfg.rng_seed == 0
    assert (cfg.suite_timeout_s, cfg.mutation_timeout_s) == (60.0, 300.0)
    assert (cfg.edge_bias, cfg.edge_enum_cap) == (0.25, 64)
    assert [v.name for v in cfg.variant_list()] == [
        "baseline", "naive_10", "naive_50", "naive_200", "improved_10", "improved_50", "improved_200"
    ]
    assert cfg.out_dir == Path("p") / "teraliz-out"

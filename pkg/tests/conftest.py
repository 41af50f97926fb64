import importlib.resources
import shutil
from pathlib import Path

import pytest

from teraliz.minilang.program import load_project, load_sources

CORPUS = Path(str(importlib.resources.files("teraliz") / "corpus"))
PROJECTS = ("abs", "bonus", "mixed")


def program_from(impl: str, tests: str = ""):
    """Program with one implementation file and one test file."""
    return load_sources([("src/impl.ml", impl)], [("tests/test_impl.ml", tests)] if tests else [])


@pytest.fixture(scope="session")
def corpus():
    cache = {}

    def get(name: str):
        if name not in cache:
            cache[name] = load_project(CORPUS / name)
        return cache[name]

    return get


@pytest.fixture
def project_copy(tmp_path):
    """Copy a bundled project into a scratch directory."""

    def copy(name: str) -> Path:
        dest = tmp_path / name
        shutil.copytree(CORPUS / name, dest)
        return dest

    return copy


_CRITERIA: dict[int, tuple[str, str]] = {}



@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[n] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, verdict = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {title}")

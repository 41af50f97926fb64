from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

from .checker import check_file
from .errors import TypeCheckError
from .nodes import FileKind, FunctionDecl, SourceFile
from .parser import parse_file


@dataclass(frozen=True)
class Program:
    """A set of source files with cross-file function resolution.

    Calls resolve to the caller's own file first and then to implementation
    files, so test helpers never leak between test files.
    """

    files: tuple[SourceFile, ...]

    @cached_property
    def _by_path(self) -> dict[str, SourceFile]:
        return {f.path: f for f in self.files}

    @cached_property
    def _impl(self) -> dict[str, tuple[FunctionDecl, str]]:
        table: dict[str, tuple[FunctionDecl, str]] = {}
        for f in self.impl_files:
            for fn in f.functions:
                table.setdefault(fn.name, (fn, f.path))
        return table

    @cached_property
    def _local(self) -> dict[tuple[str, str], FunctionDecl]:
        return {(f.path, fn.name): fn for f in self.files for fn in f.functions}

    @property
    def impl_files(self) -> list[SourceFile]:
        return [f for f in self.files if f.kind is FileKind.IMPL]

    @property
    def test_files(self) -> list[SourceFile]:
        return [f for f in self.files if f.kind is FileKind.TEST]

    def file(self, path: str) -> SourceFile:
        return self._by_path[path]

    def resolve(self, name: str, from_path: str | None = None) -> tuple[FunctionDecl, str]:
        if from_path is not None:
            fn = self._local.get((from_path, name))
            if fn is not None:
                return fn, from_path
        try:
            return self._impl[name]
        except KeyError:
            raise KeyError(f"unknown function {name!r}") from None

    def impl_function(self, name: str) -> FunctionDecl | None:
        hit = self._impl.get(name)
        return hit[0] if hit else None

    def tests(self) -> list[tuple[FunctionDecl, str]]:
        """Annotated unit tests, in file then source order."""
        return [(fn, f.path) for f in self.test_files for fn in f.functions if fn.is_test]

    def test(self, name: str) -> tuple[FunctionDecl, str]:
        for fn, path in self.tests():
            if fn.name == name:
                return fn, path
        raise KeyError(f"unknown test {name!r}")

    def with_file(self, sf: SourceFile) -> Program:
        """Return a program with ``sf`` added, replacing any file at the same path in place."""
        if any(f.path == sf.path for f in self.files):
            return Program(tuple(sf if f.path == sf.path else f for f in self.files))
        return Program(self.files + (sf,))


def check_program(program: Program) -> None:
    impl = program.impl_files
    seen: dict[str, str] = {}
    for f in impl:
        for fn in f.functions:
            if fn.name in seen:
                raise TypeCheckError(fn.span, f"{fn.name!r} defined in both {seen[fn.name]} and {f.path}")
            seen[fn.name] = f.path
    tests: dict[str, str] = {}
    for f in program.files:
        check_file(f, impl)
        for fn in f.functions:
            if fn.is_test:
                if fn.name in tests:
                    raise TypeCheckError(fn.span, f"test {fn.name!r} defined in both {tests[fn.name]} and {f.path}")
                tests[fn.name] = f.path


def load_sources(impl: Iterable[tuple[str, str]], tests: Iterable[tuple[str, str]]) -> Program:
    """Build and check a program from ``(path, text)`` pairs."""
    files = [parse_file(text, FileKind.IMPL, path, check=False) for path, text in impl]
    files += [parse_file(text, FileKind.TEST, path, check=False) for path, text in tests]
    program = Program(tuple(files))
    check_program(program)
    return program


def load_project(root: str | Path) -> Program:
    """Load ``src/**/*.ml`` as implementation and ``tests/**/*.ml`` as tests."""
    root = Path(root)

    def collect(sub: str) -> list[tuple[str, str]]:
        base = root / sub
        if not base.is_dir():
            return []
        return [
            (p.relative_to(root).as_posix(), p.read_text(encoding="utf-8"))
            for p in sorted(base.rglob("*.ml"))
        ]

    return load_sources(collect("src"), collect("tests"))

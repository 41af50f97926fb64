"""Test and assertion filtering, and method-under-test identification."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .interp import Status, TestOutcome
from .minilang.nodes import (
    ASSERT_NAMES,
    AssertEq,
    AssertThrows,
    Assign,
    Call,
    FunctionDecl,
    Let,
    ParameterizedAnn,
    RepeatedAnn,
    Span,
    Type,
    Var,
    While,
    assertions_of,
    children,
    postorder,
    walk,
)
from .minilang.printer import print_annotation
from .minilang.program import Program

GENERALIZABLE_TYPES = (Type.INT, Type.BOOL)


class Decision(str, Enum):
    ACCEPT = "Accept"
    DEFER = "Defer"
    REJECT = "Reject"


@dataclass(frozen=True)
class FilterVerdict:
    filter_name: str
    decision: Decision
    reason: str = ""

    def to_json(self) -> dict:
        return {"filter": self.filter_name, "decision": self.decision.value, "reason": self.reason}


def _accept(name: str, reason: str = "") -> FilterVerdict:
    return FilterVerdict(name, Decision.ACCEPT, reason)


def _reject(name: str, reason: str) -> FilterVerdict:
    return FilterVerdict(name, Decision.REJECT, reason)


def _included(verdicts: Iterable[FilterVerdict]) -> bool:
    return all(v.decision is not Decision.REJECT for v in verdicts)


@dataclass
class TestDescriptor:
    __test__ = False

    name: str
    file: str
    annotation: str
    assertion_count: int
    status: Status
    verdicts: list[FilterVerdict] = field(default_factory=list)

    @property
    def included(self) -> bool:
        return _included(self.verdicts)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "file": self.file,
            "annotation": self.annotation,
            "assertion_count": self.assertion_count,
            "status": self.status.value,
            "included": self.included,
            "verdicts": [v.to_json() for v in self.verdicts],
        }


@dataclass(frozen=True)
class MutRef:
    """The call whose result an assertion checks."""

    fn_name: str
    call_span: Span
    arg_exprs: tuple
    assertion_id: str
    test: str
    file: str
    generalizable_params: tuple[int, ...]
    concrete_params: tuple[int, ...]
    expects_error: bool = False

    def to_json(self) -> dict:
        return {
            "fn": self.fn_name,
            "call_span": self.call_span.as_list(),
            "arg_spans": [a.span.as_list() for a in self.arg_exprs],
            "generalizable_params": list(self.generalizable_params),
            "concrete_params": list(self.concrete_params),
            "expects_error": self.expects_error,
        }

    @classmethod
    def from_json(cls, data: dict, *, assertion_id: str, test: str, file: str, program: Program) -> MutRef:
        start, end = data["call_span"]
        call = find_call(program, file, start, end)
        return cls(
            fn_name=data["fn"],
            call_span=call.span,
            arg_exprs=call.args,
            assertion_id=assertion_id,
            test=test,
            file=file,
            generalizable_params=tuple(data["generalizable_params"]),
            concrete_params=tuple(data["concrete_params"]),
            expects_error=data["expects_error"],
        )


def find_call(program: Program, file: str, start: int, end: int) -> Call:
    for node in walk(program.file(file)):
        if isinstance(node, Call) and node.span.start == start and node.span.end == end:
            return node
    raise KeyError(f"no call at {file}[{start}:{end}]")


@dataclass
class AssertionDescriptor:
    id: str
    test: str
    file: str
    index: int
    kind: str
    verdicts: list[FilterVerdict] = field(default_factory=list)
    mut: MutRef | None = None

    @property
    def included(self) -> bool:
        return _included(self.verdicts)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "test": self.test,
            "file": self.file,
            "index": self.index,
            "kind": self.kind,
            "included": self.included,
            "verdicts": [v.to_json() for v in self.verdicts],
            "mut": None if self.mut is None else self.mut.to_json(),
        }


def assertion_id(test: str, k: int) -> str:
    return f"{test}#{k}"


# -- stage 1: tests -----------------------------------------------------------


def filter_tests(outcomes: Sequence[TestOutcome], program: Program) -> list[TestDescriptor]:
    """Apply TestType, NonPassingTest and NoAssertions to every unit test."""
    by_name = {o.name: o for o in outcomes}
    failing_by_file: dict[str, list[str]] = {}
    for o in outcomes:
        if not o.passed:
            failing_by_file.setdefault(o.file, []).append(o.name)

    descriptors = []
    for fn, path in program.tests():
        outcome = by_name[fn.name]
        count = len(assertions_of(fn))
        d = TestDescriptor(fn.name, path, print_annotation(fn.annotation), count, outcome.status)

        if isinstance(fn.annotation, (RepeatedAnn, ParameterizedAnn)):
            d.verdicts.append(_reject("TestType", f"{d.annotation} tests are not generalized"))
        else:
            d.verdicts.append(_accept("TestType"))

        if not outcome.passed:
            what = "failed" if outcome.status is Status.FAILED else f"errored ({outcome.error.value})"
            d.verdicts.append(_reject("NonPassingTest", f"test {what}"))
        elif path in failing_by_file:
            others = ", ".join(failing_by_file[path])
            d.verdicts.append(_reject("NonPassingTest", f"excluded as side effect of non-passing {others} in {path}"))
        else:
            d.verdicts.append(_accept("NonPassingTest"))

        if count == 0:
            d.verdicts.append(_reject("NoAssertions", "test body contains no assertions"))
        else:
            d.verdicts.append(_accept("NoAssertions"))
        descriptors.append(d)
    return descriptors


# -- stage 2: assertions and MUTs ----------------------------------------------


class MissingValue(Exception):
    """No unique method-under-test call could be identified."""


def _target_call(assertion, fn: FunctionDecl) -> Call:
    if isinstance(assertion, AssertThrows):
        calls = [n for n in postorder(assertion.body) if isinstance(n, Call)]
        if not calls:
            raise MissingValue("assert_throws block contains no call")
        return calls[-1]

    target = assertion.actual if isinstance(assertion, AssertEq) else assertion.expr
    if isinstance(target, Call):
        return target
    if not isinstance(target, Var):
        raise MissingValue("checked value is neither a call nor a variable")
    defs = reaching_definitions(fn, target.name, assertion)
    if len(defs) != 1:
        raise MissingValue(f"{target.name!r} has {len(defs)} reaching definitions")
    value = defs[0].value
    if not isinstance(value, Call):
        raise MissingValue(f"{target.name!r} is not defined by a call")
    return value


def reaching_definitions(fn: FunctionDecl, name: str, at) -> list:
    """Let/Assign statements for ``name`` that may reach the statement ``at``.

    Definitions textually before ``at`` reach it; so do definitions anywhere
    inside a loop that encloses ``at`` (they flow around the back edge).
    """
    loops = [w for w in _enclosing(fn.body, at) if isinstance(w, While)]
    looped = {id(n) for w in loops for n in walk(w.body)}
    return [
        n
        for n in walk(fn.body)
        if isinstance(n, (Let, Assign))
        and n.name == name
        and (n.span.start < at.span.start or id(n) in looped)
    ]


def _enclosing(root, target) -> list:
    path: list = []

    def go(node) -> bool:
        if node is target:
            return True
        path.append(node)
        for c in children(node):
            if go(c):
                return True
        path.pop()
        return False

    go(root)
    return path


def identify_mut(
    assertion, k: int, fn: FunctionDecl, file: str, program: Program
) -> MutRef:
    """Trace the checked value back to the call that produced it. Raises :class:`MissingValue`."""
    call = _target_call(assertion, fn)
    try:
        callee, where = program.resolve(call.name, file)
    except KeyError:
        raise MissingValue(f"{call.name!r} is not declared") from None
    if where == file:
        raise MissingValue(f"{call.name!r} is a test helper, not an implementation function")
    generalizable, concrete = split_params(callee)
    return MutRef(
        fn_name=call.name,
        call_span=call.span,
        arg_exprs=call.args,
        assertion_id=assertion_id(fn.name, k),
        test=fn.name,
        file=file,
        generalizable_params=generalizable,
        concrete_params=concrete,
        expects_error=isinstance(assertion, AssertThrows),
    )


def split_params(fn: FunctionDecl) -> tuple[tuple[int, ...], tuple[int, ...]]:
    gen = tuple(i for i, p in enumerate(fn.params) if p.type in GENERALIZABLE_TYPES)
    rest = tuple(i for i, p in enumerate(fn.params) if p.type not in GENERALIZABLE_TYPES)
    return gen, rest


def filter_mut_types(fn: FunctionDecl | None, expects_error: bool) -> list[FilterVerdict]:
    """ParameterType and ReturnType verdicts; both defer when the MUT is unknown."""
    if fn is None:
        return [
            FilterVerdict("ParameterType", Decision.DEFER, "MUT unknown"),
            FilterVerdict("ReturnType", Decision.DEFER, "MUT unknown"),
        ]
    gen, _ = split_params(fn)
    verdicts = [
        _accept("ParameterType") if gen else _reject("ParameterType", f"{fn.name} has no int or bool parameter")
    ]
    if expects_error:
        verdicts.append(_accept("ReturnType", "outcome is an error"))
    elif fn.return_type in (Type.STR, Type.VOID):
        verdicts.append(_reject("ReturnType", f"{fn.name} returns {fn.return_type.value}"))
    else:
        verdicts.append(_accept("ReturnType"))
    return verdicts


def analyze_assertions(program: Program, tests: Sequence[TestDescriptor]) -> list[AssertionDescriptor]:
    """Evaluate every assertion filter for every assertion of every unit test."""
    out = []
    for d in tests:
        fn, file = program.test(d.name)
        for k, a in enumerate(assertions_of(fn)):
            ad = AssertionDescriptor(assertion_id(fn.name, k), fn.name, file, k, ASSERT_NAMES[type(a)])
            ad.verdicts.append(_accept("AssertionType"))
            if d.included:
                ad.verdicts.append(_accept("ExcludedTest"))
            else:
                failed = [v.filter_name for v in d.verdicts if v.decision is Decision.REJECT]
                ad.verdicts.append(_reject("ExcludedTest", f"test rejected by {', '.join(failed)}"))
            try:
                ad.mut = identify_mut(a, k, fn, file, program)
            except MissingValue as missing:
                ad.verdicts.append(_reject("MissingValue", str(missing)))
                ad.verdicts.extend(filter_mut_types(None, False))
            else:
                ad.verdicts.append(_accept("MissingValue", ad.mut.fn_name))
                ad.verdicts.extend(
                    filter_mut_types(program.impl_function(ad.mut.fn_name), ad.mut.expects_error)
                )
            out.append(ad)
    return out


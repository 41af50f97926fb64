"""MiniLang abstract syntax tree.

Nodes are frozen dataclasses. Every node carries a :class:`Span` that is
excluded from equality, so two trees parsed from differently formatted text
compare equal when they are structurally identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Union


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int = 0
    col: int = 0

    def as_list(self) -> list[int]:
        return [self.start, self.end]


NO_SPAN = Span(-1, -1)


def _span() -> Span:
    return field(default=NO_SPAN, compare=False, repr=False)


class Type(str, Enum):
    INT = "int"
    BOOL = "bool"
    STR = "str"
    VOID = "void"


class FileKind(str, Enum):
    IMPL = "impl"
    TEST = "test"


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class StrLit:
    value: str
    span: Span = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Expr, ...]
    span: Span = _span()


Expr = Union[IntLit, BoolLit, StrLit, Var, Unary, Binary, Call]

ARITH_OPS = frozenset({"+", "-", "*", "/", "%"})
ORDER_OPS = frozenset({"<", "<=", ">", ">="})
EQUALITY_OPS = frozenset({"==", "!="})
LOGIC_OPS = frozenset({"&&", "||"})
BINARY_OPS = ARITH_OPS | ORDER_OPS | EQUALITY_OPS | LOGIC_OPS


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    stmts: tuple[Stmt, ...]
    span: Span = _span()


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Block
    orelse: Block | None = None
    span: Span = _span()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Block
    span: Span = _span()


@dataclass(frozen=True)
class Return:
    value: Expr | None = None
    span: Span = _span()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class AssertEq:
    expected: Expr
    actual: Expr
    span: Span = _span()


@dataclass(frozen=True)
class AssertTrue:
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class AssertFalse:
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class AssertThrows:
    body: Block
    # Optional error kind name ("DivByZero"/"ModByZero"); None accepts any
    # catchable error.
    kind: str | None = None
    span: Span = _span()


Assert = Union[AssertEq, AssertTrue, AssertFalse, AssertThrows]
ASSERT_TYPES = (AssertEq, AssertTrue, AssertFalse, AssertThrows)
Stmt = Union[Let, Assign, If, While, Return, ExprStmt, AssertEq, AssertTrue, AssertFalse, AssertThrows]

ASSERT_NAMES = {
    AssertEq: "assert_eq",
    AssertTrue: "assert_true",
    AssertFalse: "assert_false",
    AssertThrows: "assert_throws",
}


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class TestAnn:
    __test__ = False  # not a pytest class
    span: Span = _span()


@dataclass(frozen=True)
class RepeatedAnn:
    count: int
    span: Span = _span()


@dataclass(frozen=True)
class ParameterizedAnn:
    span: Span = _span()


@dataclass(frozen=True)
class PropertyAnn:
    supplier: str  # "baseline" | "naive" | "improved"
    tries: int
    span: Span = _span()


Annotation = Union[TestAnn, RepeatedAnn, ParameterizedAnn, PropertyAnn]
TEST_ANNOTATIONS = (TestAnn, RepeatedAnn, ParameterizedAnn)


@dataclass(frozen=True)
class Param:
    name: str
    type: Type
    span: Span = _span()


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: tuple[Param, ...]
    return_type: Type
    body: Block
    annotations: tuple[Annotation, ...] = ()
    span: Span = _span()

    @property
    def annotation(self) -> Annotation | None:
        return self.annotations[0] if self.annotations else None

    @property
    def is_test(self) -> bool:
        return isinstance(self.annotation, TEST_ANNOTATIONS)

    @property
    def is_property(self) -> bool:
        return isinstance(self.annotation, PropertyAnn)


@dataclass(frozen=True)
class SourceFile:
    path: str
    functions: tuple[FunctionDecl, ...]
    kind: FileKind = FileKind.IMPL
    span: Span = _span()

    def function(self, name: str) -> FunctionDecl | None:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None


Node = Union[Expr, Stmt, Block, FunctionDecl, SourceFile, Param, Annotation]


def children(node) -> Iterator:
    """Yield direct child nodes in source order."""
    match node:
        case Unary(operand=o):
            yield o
        case Binary(left=l, right=r):
            yield l
            yield r
        case Call(args=args):
            yield from args
        case Block(stmts=stmts):
            yield from stmts
        case Let(value=v) | Assign(value=v):
            yield v
        case If(cond=c, then=t, orelse=e):
            yield c
            yield t
            if e is not None:
                yield e
        case While(cond=c, body=b):
            yield c
            yield b
        case Return(value=v):
            if v is not None:
                yield v
        case ExprStmt(expr=e) | AssertTrue(expr=e) | AssertFalse(expr=e):
            yield e
        case AssertEq(expected=a, actual=b):
            yield a
            yield b
        case AssertThrows(body=b):
            yield b
        case FunctionDecl():
            yield from node.annotations
            yield from node.params
            yield node.body
        case SourceFile(functions=fns):
            yield from fns


def walk(node) -> Iterator:
    """Pre-order traversal in source order."""
    yield node
    for child in children(node):
        yield from walk(child)


def postorder(node) -> Iterator:
    for child in children(node):
        yield from postorder(child)
    yield node


def transform(node, fn):
    """Rebuild ``node`` bottom-up, replacing each node ``n`` with ``fn(n)``.

    ``fn`` returns the node to use (possibly ``n`` itself). A Block statement
    replaced by ``None`` is dropped from its block.
    """
    match node:
        case Unary():
            new = _replace(node, operand=transform(node.operand, fn))
        case Binary():
            new = _replace(node, left=transform(node.left, fn), right=transform(node.right, fn))
        case Call():
            new = _replace(node, args=tuple(transform(a, fn) for a in node.args))
        case Block():
            stmts = tuple(s for s in (transform(s, fn) for s in node.stmts) if s is not None)
            new = _replace(node, stmts=stmts)
        case Let() | Assign():
            new = _replace(node, value=transform(node.value, fn))
        case If():
            new = _replace(
                node,
                cond=transform(node.cond, fn),
                then=transform(node.then, fn),
                orelse=None if node.orelse is None else transform(node.orelse, fn),
            )
        case While():
            new = _replace(node, cond=transform(node.cond, fn), body=transform(node.body, fn))
        case Return():
            new = node if node.value is None else _replace(node, value=transform(node.value, fn))
        case ExprStmt():
            new = _replace(node, expr=transform(node.expr, fn))
        case AssertEq():
            new = _replace(
                node, expected=transform(node.expected, fn), actual=transform(node.actual, fn)
            )
        case AssertTrue() | AssertFalse():
            new = _replace(node, expr=transform(node.expr, fn))
        case AssertThrows():
            new = _replace(node, body=transform(node.body, fn))
        case FunctionDecl():
            new = _replace(node, body=transform(node.body, fn))
        case SourceFile():
            new = _replace(node, functions=tuple(transform(f, fn) for f in node.functions))
        case _:
            new = node
    return fn(new)


def _replace(node, **changes):
    # Avoid reallocating untouched subtrees; keeps identity for unchanged nodes.
    if all(_same(getattr(node, k), v) for k, v in changes.items()):
        return node
    return replace(node, **changes)


def _same(old, new) -> bool:
    if isinstance(old, tuple) and isinstance(new, tuple):
        return len(old) == len(new) and all(a is b for a, b in zip(old, new))
    return old is new


def assertions_of(fn: FunctionDecl) -> list:
    """Assert statements of ``fn`` in source order (nested blocks included)."""
    return [n for n in walk(fn.body) if isinstance(n, ASSERT_TYPES)]

"""Static rules: name resolution, types, annotation and assertion placement."""
from __future__ import annotations

from typing import Iterable

from .errors import TypeCheckError
from .nodes import (
    ARITH_OPS,
    EQUALITY_OPS,
    LOGIC_OPS,
    ORDER_OPS,
    AssertEq,
    AssertFalse,
    AssertThrows,
    AssertTrue,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    ExprStmt,
    FileKind,
    FunctionDecl,
    If,
    IntLit,
    Let,
    PropertyAnn,
    Return,
    SourceFile,
    StrLit,
    TEST_ANNOTATIONS,
    Type,
    Unary,
    Var,
    While,
)


def check_file(sf: SourceFile, externs: Iterable[SourceFile] = ()) -> None:
    """Raise :class:`TypeCheckError` on the first static violation in ``sf``."""
    own: dict[str, FunctionDecl] = {}
    for fn in sf.functions:
        if fn.name in own:
            raise TypeCheckError(fn.span, f"duplicate function {fn.name!r}")
        own[fn.name] = fn
    signatures = {}
    for ext in externs:
        if ext.path == sf.path:
            continue
        for fn in ext.functions:
            signatures.setdefault(fn.name, fn)
    signatures.update(own)
    for fn in sf.functions:
        _FunctionChecker(sf, fn, signatures).check()


def definitely_returns(block: Block) -> bool:
    if not block.stmts:
        return False
    last = block.stmts[-1]
    if isinstance(last, Return):
        return True
    if isinstance(last, If) and last.orelse is not None:
        return definitely_returns(last.then) and definitely_returns(last.orelse)
    return False


class _FunctionChecker:
    def __init__(self, sf: SourceFile, fn: FunctionDecl, signatures: dict[str, FunctionDecl]):
        self.sf = sf
        self.fn = fn
        self.signatures = signatures
        self.scopes: list[dict[str, Type]] = []

    def check(self) -> None:
        fn = self.fn
        if len(fn.annotations) > 1:
            raise TypeCheckError(fn.annotations[1].span, f"{fn.name!r} has more than one annotation")
        ann = fn.annotation
        if ann is not None and self.sf.kind is not FileKind.TEST:
            raise TypeCheckError(ann.span, "annotations are only allowed in test files")
        if isinstance(ann, TEST_ANNOTATIONS):
            if fn.params or fn.return_type is not Type.VOID:
                raise TypeCheckError(fn.span, f"test {fn.name!r} must take no parameters and return void")
        if isinstance(ann, PropertyAnn):
            if fn.return_type is not Type.VOID:
                raise TypeCheckError(fn.span, f"property {fn.name!r} must return void")
            if any(p.type not in (Type.INT, Type.BOOL) for p in fn.params):
                raise TypeCheckError(fn.span, f"property {fn.name!r} parameters must be int or bool")
        scope: dict[str, Type] = {}
        for p in fn.params:
            if p.name in scope:
                raise TypeCheckError(p.span, f"duplicate parameter {p.name!r}")
            if p.type is Type.VOID:
                raise TypeCheckError(p.span, "parameters cannot be void")
            scope[p.name] = p.type
        self.scopes = [scope]
        self.block(fn.body, new_scope=False)
        if fn.return_type is not Type.VOID and not definitely_returns(fn.body):
            raise TypeCheckError(fn.span, f"{fn.name!r} may finish without returning a value")

    # -- scopes --------------------------------------------------------------

    def lookup(self, name: str) -> Type | None:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def block(self, block: Block, new_scope: bool = True) -> None:
        if new_scope:
            self.scopes.append({})
        for stmt in block.stmts:
            self.stmt(stmt)
        if new_scope:
            self.scopes.pop()

    # -- statements ----------------------------------------------------------

    def stmt(self, s) -> None:
        match s:
            case Let(name=name, value=value):
                if self.lookup(name) is not None:
                    raise TypeCheckError(s.span, f"{name!r} is already defined")
                t = self.expr(value)
                if t is Type.VOID:
                    raise TypeCheckError(value.span, "cannot bind a void value")
                self.scopes[-1][name] = t
            case Assign(name=name, value=value):
                target = self.lookup(name)
                if target is None:
                    raise TypeCheckError(s.span, f"unknown variable {name!r}")
                self.expect(value, target)
            case If(cond=cond, then=then, orelse=orelse):
                self.expect(cond, Type.BOOL)
                self.block(then)
                if orelse is not None:
                    self.block(orelse)
            case While(cond=cond, body=body):
                self.expect(cond, Type.BOOL)
                self.block(body)
            case Return(value=None):
                if self.fn.return_type is not Type.VOID:
                    raise TypeCheckError(s.span, "missing return value")
            case Return(value=value):
                if self.fn.return_type is Type.VOID:
                    raise TypeCheckError(s.span, "void function cannot return a value")
                self.expect(value, self.fn.return_type)
            case ExprStmt(expr=e):
                if not isinstance(e, Call):
                    raise TypeCheckError(s.span, "only calls may be used as statements")
                self.expr(e, allow_void=True)
            case AssertEq() | AssertTrue() | AssertFalse() | AssertThrows():
                if self.sf.kind is not FileKind.TEST:
                    raise TypeCheckError(s.span, "assertions are only allowed in test files")
                self.assertion(s)
            case _:
                raise TypeCheckError(getattr(s, "span", None), f"unknown statement {s!r}")

    def assertion(self, s) -> None:
        match s:
            case AssertEq(expected=a, actual=b):
                ta = self.expr(a)
                tb = self.expr(b)
                if ta is Type.VOID or ta is not tb:
                    raise TypeCheckError(s.span, f"assert_eq operands differ: {ta.value} vs {tb.value}")
            case AssertTrue(expr=e) | AssertFalse(expr=e):
                self.expect(e, Type.BOOL)
            case AssertThrows(body=body):
                self.block(body)

    # -- expressions ---------------------------------------------------------

    def expect(self, e, t: Type) -> None:
        actual = self.expr(e)
        if actual is not t:
            raise TypeCheckError(e.span, f"expected {t.value}, found {actual.value}")

    def expr(self, e, allow_void: bool = False) -> Type:
        match e:
            case IntLit():
                return Type.INT
            case BoolLit():
                return Type.BOOL
            case StrLit():
                return Type.STR
            case Var(name=name):
                t = self.lookup(name)
                if t is None:
                    raise TypeCheckError(e.span, f"unknown variable {name!r}")
                return t
            case Unary(op="-", operand=o):
                self.expect(o, Type.INT)
                return Type.INT
            case Unary(op="!", operand=o):
                self.expect(o, Type.BOOL)
                return Type.BOOL
            case Binary(op=op, left=l, right=r):
                if op in ARITH_OPS:
                    self.expect(l, Type.INT)
                    self.expect(r, Type.INT)
                    return Type.INT
                if op in ORDER_OPS:
                    self.expect(l, Type.INT)
                    self.expect(r, Type.INT)
                    return Type.BOOL
                if op in LOGIC_OPS:
                    self.expect(l, Type.BOOL)
                    self.expect(r, Type.BOOL)
                    return Type.BOOL
                if op in EQUALITY_OPS:
                    tl = self.expr(l)
                    if tl is Type.VOID:
                        raise TypeCheckError(l.span, "cannot compare void")
                    self.expect(r, tl)
                    return Type.BOOL
                raise TypeCheckError(e.span, f"unknown operator {op!r}")
            case Call(name=name, args=args):
                fn = self.signatures.get(name)
                if fn is None:
                    raise TypeCheckError(e.span, f"unknown function {name!r}")
                if fn.is_test or fn.is_property:
                    raise TypeCheckError(e.span, f"cannot call test {name!r}")
                if len(args) != len(fn.params):
                    raise TypeCheckError(
                        e.span, f"{name!r} takes {len(fn.params)} arguments, got {len(args)}"
                    )
                for arg, p in zip(args, fn.params):
                    self.expect(arg, p.type)
                if fn.return_type is Type.VOID and not allow_void:
                    raise TypeCheckError(e.span, f"void call {name!r} used as a value")
                return fn.return_type
        raise TypeCheckError(getattr(e, "span", None), f"unknown expression {e!r}")

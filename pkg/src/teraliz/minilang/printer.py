"""Canonical pretty-printer. Output re-parses to a structurally equal AST."""
from __future__ import annotations

from .lexer import escape
from .nodes import (
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
    FunctionDecl,
    If,
    IntLit,
    Let,
    ParameterizedAnn,
    PropertyAnn,
    RepeatedAnn,
    Return,
    SourceFile,
    StrLit,
    TestAnn,
    Unary,
    Var,
    While,
)
from .parser import PRECEDENCE, UNARY_PRECEDENCE

INDENT = "    "
_ATOM = UNARY_PRECEDENCE + 1


def precedence(e) -> int:
    if isinstance(e, Binary):
        return PRECEDENCE[e.op]
    if isinstance(e, Unary):
        return UNARY_PRECEDENCE
    return _ATOM


def print_expr(e) -> str:
    match e:
        case IntLit(value=v):
            return str(v)
        case BoolLit(value=v):
            return "true" if v else "false"
        case StrLit(value=v):
            return f'"{escape(v)}"'
        case Var(name=n):
            return n
        case Call(name=n, args=args):
            return f"{n}({', '.join(print_expr(a) for a in args)})"
        case Unary(op=op, operand=o):
            inner = print_expr(o)
            # "-5" would re-parse as a folded literal.
            if precedence(o) < UNARY_PRECEDENCE or (op == "-" and isinstance(o, IntLit) and o.value >= 0):
                inner = f"({inner})"
            return f"{op}{inner}"
        case Binary(op=op, left=l, right=r):
            p = PRECEDENCE[op]
            ls = print_expr(l)
            rs = print_expr(r)
            if precedence(l) < p:
                ls = f"({ls})"
            if precedence(r) <= p:
                rs = f"({rs})"
            return f"{ls} {op} {rs}"
    raise TypeError(f"not an expression: {e!r}")


def print_annotation(a) -> str:
    match a:
        case TestAnn():
            return "#[test]"
        case ParameterizedAnn():
            return "#[parameterized]"
        case RepeatedAnn(count=c):
            return f"#[repeated({c})]"
        case PropertyAnn(supplier=s, tries=t):
            return f"#[property(supplier={s}, tries={t})]"
    raise TypeError(f"not an annotation: {a!r}")


def _block(block: Block, depth: int, out: list[str]) -> None:
    for stmt in block.stmts:
        _stmt(stmt, depth, out)


def _stmt(s, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    match s:
        case Let(name=n, value=v):
            out.append(f"{pad}let {n} = {print_expr(v)};")
        case Assign(name=n, value=v):
            out.append(f"{pad}{n} = {print_expr(v)};")
        case Return(value=None):
            out.append(f"{pad}return;")
        case Return(value=v):
            out.append(f"{pad}return {print_expr(v)};")
        case ExprStmt(expr=e):
            out.append(f"{pad}{print_expr(e)};")
        case AssertEq(expected=a, actual=b):
            out.append(f"{pad}assert_eq({print_expr(a)}, {print_expr(b)});")
        case AssertTrue(expr=e):
            out.append(f"{pad}assert_true({print_expr(e)});")
        case AssertFalse(expr=e):
            out.append(f"{pad}assert_false({print_expr(e)});")
        case AssertThrows(body=b, kind=k):
            head = "assert_throws" if k is None else f"assert_throws({k})"
            out.append(f"{pad}{head} {{")
            _block(b, depth + 1, out)
            out.append(f"{pad}}}")
        case While(cond=c, body=b):
            out.append(f"{pad}while {print_expr(c)} {{")
            _block(b, depth + 1, out)
            out.append(f"{pad}}}")
        case If():
            _if(s, depth, out, pad)
        case _:
            raise TypeError(f"not a statement: {s!r}")


def _if(s: If, depth: int, out: list[str], lead: str) -> None:
    pad = INDENT * depth
    out.append(f"{lead}if {print_expr(s.cond)} {{")
    _block(s.then, depth + 1, out)
    orelse = s.orelse
    if orelse is None:
        out.append(f"{pad}}}")
    elif len(orelse.stmts) == 1 and isinstance(orelse.stmts[0], If):
        out.append(f"{pad}}} else ")
        # Join "} else " with the nested "if ..." line.
        mark = len(out) - 1
        _if(orelse.stmts[0], depth, out, "")
        out[mark] = out[mark] + out.pop(mark + 1)
    else:
        out.append(f"{pad}}} else {{")
        _block(orelse, depth + 1, out)
        out.append(f"{pad}}}")


def print_function(fn: FunctionDecl) -> str:
    out = [print_annotation(a) for a in fn.annotations]
    params = ", ".join(f"{p.name}: {p.type.value}" for p in fn.params)
    out.append(f"fn {fn.name}({params}) -> {fn.return_type.value} {{")
    _block(fn.body, 1, out)
    out.append("}")
    return "\n".join(out) + "\n"


def pretty_print(sf: SourceFile) -> str:
    return "\n".join(print_function(fn) for fn in sf.functions)

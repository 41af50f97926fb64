"""Recursive-descent parser for MiniLang. Grammar: docs/grammar.md."""
from __future__ import annotations

from typing import Iterable

from .checker import check_file
from .errors import ParseError
from .lexer import Token, tokenize
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
    FileKind,
    FunctionDecl,
    If,
    IntLit,
    Let,
    Param,
    ParameterizedAnn,
    PropertyAnn,
    RepeatedAnn,
    Return,
    SourceFile,
    Span,
    StrLit,
    TestAnn,
    Type,
    Unary,
    Var,
    While,
)

INT_MAX = 2**31 - 1

# Binary precedence levels, loosest first. All levels are left-associative.
PRECEDENCE: dict[str, int] = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
UNARY_PRECEDENCE = 7

SUPPLIERS = ("baseline", "naive", "improved")
ERROR_KIND_NAMES = ("DivByZero", "ModByZero")


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(tok.line, tok.col, f"{message}, found {found}")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error("expected identifier")
        return self.advance()

    def span(self, first: Token, last: Token | None = None) -> Span:
        last = last or self.tokens[self.pos - 1]
        return Span(first.start, last.end, first.line, first.col)

    # -- declarations --------------------------------------------------------

    def parse_file(self, path: str, kind: FileKind) -> SourceFile:
        functions = []
        while self.tok.kind != "eof":
            functions.append(self.parse_function())
        span = Span(0, len(self.text), 1, 1)
        return SourceFile(path, tuple(functions), kind, span)

    def parse_function(self) -> FunctionDecl:
        annotations = []
        while self.at("#["):
            annotations.append(self.parse_annotation())
        first = self.expect("fn")
        name = self.expect_ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptok = self.expect_ident()
                self.expect(":")
                ptype = self.parse_type()
                params.append(Param(ptok.text, ptype, self.span(ptok)))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        ret = Type.VOID
        if self.at("->"):
            self.advance()
            ret = self.parse_type()
        body = self.parse_block()
        return FunctionDecl(
            name, tuple(params), ret, body, tuple(annotations), self.span(first)
        )

    def parse_type(self) -> Type:
        if self.at("int", "bool", "str", "void"):
            return Type(self.advance().text)
        raise self.error("expected type")

    def parse_annotation(self):
        first = self.expect("#[")
        name_tok = self.expect_ident()
        name = name_tok.text
        if name == "test":
            self.expect("]")
            return TestAnn(self.span(first))
        if name == "parameterized":
            self.expect("]")
            return ParameterizedAnn(self.span(first))
        if name == "repeated":
            self.expect("(")
            count = self.parse_count()
            self.expect(")")
            self.expect("]")
            return RepeatedAnn(count, self.span(first))
        if name == "property":
            self.expect("(")
            fields = {}
            while True:
                key = self.expect_ident()
                self.expect("=")
                if key.text == "supplier":
                    val = self.expect_ident()
                    if val.text not in SUPPLIERS:
                        raise self.error("unknown supplier", val)
                    fields["supplier"] = val.text
                elif key.text == "tries":
                    fields["tries"] = self.parse_count()
                else:
                    raise self.error("unknown property field", key)
                if not self.at(","):
                    break
                self.advance()
            self.expect(")")
            self.expect("]")
            if set(fields) != {"supplier", "tries"}:
                raise self.error("property needs supplier and tries", name_tok)
            return PropertyAnn(fields["supplier"], fields["tries"], self.span(first))
        raise self.error("unknown annotation", name_tok)

    def parse_count(self) -> int:
        if self.tok.kind != "int":
            raise self.error("expected count")
        t = self.advance()
        if t.value < 1:
            raise self.error("count must be positive", t)
        return t.value

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> Block:
        first = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("expected '}'")
            stmts.append(self.parse_stmt())
        self.expect("}")
        return Block(tuple(stmts), self.span(first))

    def parse_stmt(self):
        first = self.tok
        if self.at("let"):
            self.advance()
            name = self.expect_ident().text
            self.expect("=")
            value = self.parse_expr()
            self.expect(";")
            return Let(name, value, self.span(first))
        if first.kind == "ident" and self.peek().kind == "punct" and self.peek().text == "=":
            self.advance()
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            return Assign(first.text, value, self.span(first))
        if self.at("if"):
            return self.parse_if()
        if self.at("while"):
            self.advance()
            cond = self.parse_expr()
            body = self.parse_block()
            return While(cond, body, self.span(first))
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            return Return(value, self.span(first))
        if self.at("assert_eq"):
            self.advance()
            self.expect("(")
            expected = self.parse_expr()
            self.expect(",")
            actual = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return AssertEq(expected, actual, self.span(first))
        if self.at("assert_true", "assert_false"):
            cls = AssertTrue if self.advance().text == "assert_true" else AssertFalse
            self.expect("(")
            e = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return cls(e, self.span(first))
        if self.at("assert_throws"):
            self.advance()
            kind = None
            if self.at("("):
                self.advance()
                ktok = self.expect_ident()
                if ktok.text not in ERROR_KIND_NAMES:
                    raise self.error("unknown error kind", ktok)
                kind = ktok.text
                self.expect(")")
            body = self.parse_block()
            return AssertThrows(body, kind, self.span(first))
        e = self.parse_expr()
        self.expect(";")
        return ExprStmt(e, self.span(first))

    def parse_if(self) -> If:
        first = self.expect("if")
        cond = self.parse_expr()
        then = self.parse_block()
        orelse = None
        if self.at("else"):
            self.advance()
            if self.at("if"):
                nested = self.parse_if()
                orelse = Block((nested,), nested.span)
            else:
                orelse = self.parse_block()
        return If(cond, then, orelse, self.span(first))

    # -- expressions ---------------------------------------------------------

    def parse_expr(self, min_prec: int = 1):
        first = self.tok
        left = self.parse_unary()
        while True:
            t = self.tok
            prec = PRECEDENCE.get(t.text) if t.kind == "punct" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.parse_expr(prec + 1)
            # Spans run from the first to the last token, parentheses included.
            left = Binary(t.text, left, right, self.span(first))

    def parse_unary(self):
        t = self.tok
        if self.at("-"):
            self.advance()
            if self.tok.kind == "int":
                lit = self.advance()
                if lit.value > INT_MAX + 1:
                    raise self.error("integer literal out of range", lit)
                return IntLit(-lit.value, self.span(t))
            operand = self.parse_unary()
            return Unary("-", operand, self.span(t))
        if self.at("!"):
            self.advance()
            operand = self.parse_unary()
            return Unary("!", operand, self.span(t))
        return self.parse_primary()

    def parse_primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            if t.value > INT_MAX:
                raise self.error("integer literal out of range", t)
            return IntLit(t.value, self.span(t))
        if t.kind == "str":
            self.advance()
            return StrLit(t.value, self.span(t))
        if self.at("true", "false"):
            self.advance()
            return BoolLit(t.text == "true", self.span(t))
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.at(","):
                            break
                        self.advance()
                self.expect(")")
                return Call(t.text, tuple(args), self.span(t))
            return Var(t.text, self.span(t))
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        raise self.error("expected expression")


def parse_file(
    text: str,
    kind: FileKind | str = FileKind.IMPL,
    path: str = "<string>",
    *,
    externs: Iterable[SourceFile] = (),
    check: bool = True,
) -> SourceFile:
    """Parse ``text`` into a :class:`SourceFile`.

    With ``check`` (the default) the file is also type-checked; calls may
    resolve to the file's own functions or to functions of ``externs``.
    """
    sf = Parser(text).parse_file(path, FileKind(kind))
    if check:
        check_file(sf, externs)
    return sf


def parse_expr(text: str):
    """Parse a standalone expression (no type checking)."""
    p = Parser(text)
    e = p.parse_expr()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return e


def parse_stmt(text: str):
    p = Parser(text)
    s = p.parse_stmt()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return s

"""MiniLang: a small imperative language with int32/bool/str values and unit-test assertions."""
from .errors import MiniLangError, ParseError, TypeCheckError
from .nodes import FileKind, FunctionDecl, SourceFile, Span, Type
from .ops import INT_MAX, INT_MIN, ErrorKind, RuntimeFault
from .parser import parse_expr, parse_file, parse_stmt
from .printer import pretty_print, print_expr
from .program import Program, check_program, load_project, load_sources

__all__ = [
    "ErrorKind",
    "FileKind",
    "FunctionDecl",
    "INT_MAX",
    "INT_MIN",
    "MiniLangError",
    "ParseError",
    "Program",
    "RuntimeFault",
    "SourceFile",
    "Span",
    "Type",
    "TypeCheckError",
    "check_program",
    "load_project",
    "load_sources",
    "parse_expr",
    "parse_file",
    "parse_stmt",
    "pretty_print",
    "print_expr",
]

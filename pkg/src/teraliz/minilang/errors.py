from __future__ import annotations


class MiniLangError(Exception):
    """Base class for static MiniLang errors."""


class ParseError(MiniLangError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class TypeCheckError(MiniLangError):
    """A program that parses but violates a static rule."""

    def __init__(self, span, message: str):
        where = f"{span.line}:{span.col}: " if span is not None and span.line else ""
        super().__init__(f"{where}{message}")
        self.span = span
        self.message = message

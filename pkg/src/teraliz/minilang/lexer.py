from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = frozenset(
    {
        "fn", "let", "if", "else", "while", "return", "true", "false",
        "int", "bool", "str", "void",
        "assert_eq", "assert_true", "assert_false", "assert_throws",
    }
)

# Longest match first.
PUNCTUATION = (
    "#[", "->", "==", "!=", "<=", ">=", "&&", "||",
    "(", ")", "{", "}", "[", "]", ",", ";", ":", "=", "<", ">",
    "+", "-", "*", "/", "%", "!",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>"""
    + "|".join(re.escape(p) for p in PUNCTUATION)
    + r""")
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "kw" | "int" | "str" | "punct" | "eof"
    text: str
    start: int
    end: int
    line: int
    col: int

    @property
    def value(self):
        if self.kind == "int":
            return int(self.text)
        if self.kind == "str":
            return unescape(self.text[1:-1])
        return self.text


def unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def escape(value: str) -> str:
    return (
        value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    )


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "str":
            # Scan escape pairs left to right so an escaped backslash is not misread.
            bad = next((e for e in re.finditer(r"\\.", lexeme[1:-1]) if e.group()[1] not in 'nt"\\'), None)
            if bad:
                raise ParseError(line, pos - line_start + 1, f"bad escape {bad.group()!r}")
        if kind not in ("ws", "comment"):
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, lexeme, pos, m.end(), line, pos - line_start + 1))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", n, n, line, n - line_start + 1))
    return tokens

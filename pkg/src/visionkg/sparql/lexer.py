from __future__ import annotations

import re
from dataclasses import dataclass


class QuerySyntaxError(ValueError):
    """A positioned query error; ``expected`` lists the tokens that would have been accepted."""

    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        self.message = message
        text = f"line {line}, column {column}: {message}"
        if self.expected:
            text += "; expected one of: " + ", ".join(self.expected)
        super().__init__(text)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


KEYWORDS = {
    "SELECT", "DISTINCT", "WHERE", "PREFIX", "UNION", "FILTER", "GROUP", "BY", "ORDER",
    "ASC", "DESC", "LIMIT", "OFFSET", "COUNT", "AS", "IN", "NOT", "TRUE", "FALSE",
}  # fmt: skip

_TOKENS = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRI", r'<[^<>"{}|^`\\\x00-\x20]*>'),
    ("VAR", r"[?$][A-Za-z0-9_À-\U000EFFFF]+"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"' "|" r"'(?:[^'\\\n\r]|\\.)*'"),
    ("LANGTAG", r"@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*"),
    ("DOUBLE", r"(?:[0-9]+\.[0-9]*|\.[0-9]+|[0-9]+)[eE][+-]?[0-9]+"),
    ("DECIMAL", r"[0-9]*\.[0-9]+"),
    ("INTEGER", r"[0-9]+"),
    ("PNAME", r"(?:[A-Za-z][A-Za-z0-9_\-.]*)?:(?:[A-Za-z0-9_\-:%]|\.(?=[A-Za-z0-9_\-:%]))*"),
    ("NAME", r"[A-Za-z][A-Za-z0-9_]*"),
    ("OP", r"\^\^|&&|\|\||!=|<=|>=|[{}().,;*=<>!+\-]"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{rx})" for name, rx in _TOKENS))


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _MASTER.match(text, pos)
        if not m:
            col = pos - line_start + 1
            ch = text[pos]
            if ch in "\"'":
                raise QuerySyntaxError("unterminated string literal", line, col)
            raise QuerySyntaxError(f"unexpected character {ch!r}", line, col)
        kind, value = m.lastgroup, m.group()
        if kind not in ("WS", "COMMENT"):
            if kind == "NAME":
                upper = value.upper()
                if upper in KEYWORDS:
                    kind, value = "KW", upper
                elif value == "a":
                    kind = "A"
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens

"""N-Triples reader and canonical writer."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .terms import IRI, XSD_STRING, BlankNode, Literal, Term, TermError

__all__ = [
    "Diagnostic",
    "NTriplesSyntaxError",
    "ParseResult",
    "LoadCounts",
    "parse_ntriples",
    "serialize_ntriples",
    "serialize_term",
    "load_into",
]

_IRIREF = re.compile(r'<((?:[^\x00-\x20<>"{}|^`\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*)>')
_IRI_CHAR_BAD = re.compile(r'[\x00-\x20<>"{}|^`]|\\(?!u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8})')
_BNODE = re.compile(
    r"_:([A-Za-z0-9_\u00C0-\U000EFFFF](?:[A-Za-z0-9_\-.\u00B7\u00C0-\U000EFFFF]*"
    r"[A-Za-z0-9_\-\u00B7\u00C0-\U000EFFFF])?)"
)
_STRING = re.compile(r'"((?:[^"\\\n\r]|\\[tbnrf"\'\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*)"')
_LANGTAG = re.compile(r"@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*)")
_WS = re.compile(r"[ \t]*")
_ESCAPE = re.compile(r"\\(?:([tbnrf\"'\\])|u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8}))")
_ECHARS = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str
    text: str = ""

    def __str__(self):
        where = f"line {self.line}, column {self.column}"
        return f"{where}: {self.message}" + (f" near {self.text!r}" if self.text else "")


class NTriplesSyntaxError(ValueError):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


@dataclass
class ParseResult:
    triples: list[tuple[Term, Term, Term]] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def _unescape(text: str) -> str:
    if "\\" not in text:
        return text

    def repl(m):
        if m.group(1):
            return _ECHARS[m.group(1)]
        return chr(int(m.group(2) or m.group(3), 16))

    return _ESCAPE.sub(repl, text)


class _LineError(Exception):
    def __init__(self, column: int, message: str, text: str = ""):
        self.column = column
        self.message = message
        self.text = text


def _diagnose_iri(line: str, pos: int) -> _LineError:
    end = line.find(">", pos + 1)
    body_end = end if end != -1 else len(line)
    bad = _IRI_CHAR_BAD.search(line, pos + 1, body_end)
    if bad:
        return _LineError(bad.start() + 1, "illegal IRI character", line[bad.start() : bad.start() + 2])
    return _LineError(pos + 1, "unterminated IRI", line[pos : pos + 20])


def _read_iri(line: str, pos: int) -> tuple[IRI, int]:
    m = _IRIREF.match(line, pos)
    if not m:
        raise _diagnose_iri(line, pos)
    value = _unescape(m.group(1))
    try:
        return IRI(value), m.end()
    except TermError as exc:
        raise _LineError(pos + 1, str(exc), m.group(0)) from None


def _read_bnode(line: str, pos: int) -> tuple[BlankNode, int]:
    m = _BNODE.match(line, pos)
    if not m:
        raise _LineError(pos + 1, "malformed blank node label", line[pos : pos + 20])
    return BlankNode(m.group(1)), m.end()


def _read_literal(line: str, pos: int) -> tuple[Literal, int]:
    m = _STRING.match(line, pos)
    if not m:
        # Find where the well-formed prefix stops to point at the culprit.
        i = pos + 1
        while i < len(line):
            c = line[i]
            if c == '"':
                break
            if c in "\r\n":
                raise _LineError(i + 1, "raw line break inside literal", repr(c))
            if c == "\\":
                esc = _ESCAPE.match(line, i)
                if not esc:
                    raise _LineError(i + 1, "invalid escape sequence", line[i : i + 2])
                i = esc.end()
                continue
            i += 1
        raise _LineError(pos + 1, "unterminated literal", line[pos : pos + 20])
    lexical = _unescape(m.group(1))
    end = m.end()
    try:
        if line.startswith("^^", end):
            if not line.startswith("<", end + 2):
                raise _LineError(end + 3, "expected datatype IRI", line[end + 2 : end + 12])
            datatype, end = _read_iri(line, end + 2)
            return Literal(lexical, datatype.value), end
        if line.startswith("@", end):
            tag = _LANGTAG.match(line, end)
            if not tag:
                raise _LineError(end + 1, "malformed language tag", line[end : end + 10])
            return Literal(lexical, language=tag.group(1)), tag.end()
        return Literal(lexical, XSD_STRING), end
    except TermError as exc:
        raise _LineError(pos + 1, str(exc), line[pos:end]) from None


def _parse_line(line: str):
    pos = _WS.match(line).end()
    if pos >= len(line) or line[pos] == "#":
        return None

    c = line[pos]
    if c == "<":
        s, pos = _read_iri(line, pos)
    elif line.startswith("_:", pos):
        s, pos = _read_bnode(line, pos)
    else:
        raise _LineError(pos + 1, "expected subject IRI or blank node", line[pos : pos + 20])
    pos = _WS.match(line, pos).end()

    if pos < len(line) and line[pos] == "<":
        p, pos = _read_iri(line, pos)
    else:
        raise _LineError(pos + 1, "expected predicate IRI", line[pos : pos + 20])
    pos = _WS.match(line, pos).end()

    c = line[pos] if pos < len(line) else ""
    if c == "<":
        o, pos = _read_iri(line, pos)
    elif line.startswith("_:", pos):
        o, pos = _read_bnode(line, pos)
    elif c == '"':
        o, pos = _read_literal(line, pos)
    else:
        raise _LineError(pos + 1, "expected object IRI, blank node or literal", line[pos : pos + 20])
    pos = _WS.match(line, pos).end()

    if pos >= len(line) or line[pos] != ".":
        raise _LineError(pos + 1, "missing terminating '.'", line[pos : pos + 20])
    pos = _WS.match(line, pos + 1).end()
    if pos < len(line) and line[pos] != "#":
        raise _LineError(pos + 1, "unexpected text after '.'", line[pos : pos + 20])
    return s, p, o


def parse_ntriples(text: str, strict: bool = True) -> ParseResult:
    """Parse an N-Triples document.

    In strict mode the first malformed line raises :class:`NTriplesSyntaxError`;
    otherwise malformed lines are skipped and reported as diagnostics.
    """
    result = ParseResult()
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        try:
            triple = _parse_line(line)
        except _LineError as err:
            column = max(1, min(err.column, len(line)))
            diag = Diagnostic(lineno, column, err.message, err.text)
            if strict:
                raise NTriplesSyntaxError(diag) from None
            result.diagnostics.append(diag)
            continue
        if triple is not None:
            result.triples.append(triple)
    return result


def _escape_literal(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\b":
            out.append("\\b")
        elif ch == "\f":
            out.append("\\f")
        elif (ch < " " and ch != "\t") or ch == "\x7f":
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def serialize_term(term: Term) -> str:
    if isinstance(term, IRI):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    body = term.lexical
    if any(c in body for c in '\\"\n\r\b\f') or any(c < " " or c == "\x7f" for c in body):
        body = _escape_literal(body)
    if term.language:
        return f'"{body}"@{term.language}'
    if term.datatype == XSD_STRING:
        return f'"{body}"'
    return f'"{body}"^^<{term.datatype}>'


def serialize_ntriples(triples) -> str:
    """Canonical document: one line per distinct triple, sorted by term text."""
    rows = {(serialize_term(s), serialize_term(p), serialize_term(o)) for s, p, o in triples}
    return "".join(f"{s} {p} {o} .\n" for s, p, o in sorted(rows))


@dataclass
class LoadCounts:
    parsed: int = 0
    inserted: int = 0
    skipped: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)


def load_into(store, text: str, strict: bool = True) -> LoadCounts:
    """Parse ``text`` and insert its triples; duplicates and bad lines count as skipped."""
    result = parse_ntriples(text, strict=strict)
    counts = LoadCounts(parsed=len(result.triples), diagnostics=result.diagnostics)
    for s, p, o in result.triples:
        if store.add(s, p, o):
            counts.inserted += 1
        else:
            counts.skipped += 1
    counts.skipped += len(result.diagnostics)
    return counts

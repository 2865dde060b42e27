"""Recursive-descent parser for the SPARQL subset.

Grammar (keywords case-insensitive)::

    query     := prefix* 'SELECT' 'DISTINCT'? select 'WHERE'? group modifiers
    prefix    := 'PREFIX' PNAME_NS IRI
    select    := '*' | (var | '(' 'COUNT' '(' 'DISTINCT'? ('*' | var) ')' 'AS' var ')')+
    group     := '{' (triples | 'FILTER' '(' expr ')' | group ('UNION' group)*)* '}'
    triples   := node node node ((';' node node) | (',' node))* '.'?
    modifiers := ('GROUP' 'BY' var+)? ('ORDER' 'BY' (var | ('ASC'|'DESC') '(' var ')')+)?
                 ('LIMIT' INT | 'OFFSET' INT)*

OPTIONAL, property paths, sub-queries, CONSTRUCT/ASK/DESCRIBE and BIND are
not part of the subset and are rejected with a positioned error.
"""

from __future__ import annotations

from ..terms import (
    IRI,
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    Literal,
    TermError,
)
from .ast import (
    BinOp,
    Const,
    Count,
    Filter,
    GroupPattern,
    In,
    Not,
    Query,
    TriplePattern,
    UnionPattern,
    Var,
    expr_variables,
)
from .lexer import QuerySyntaxError, Token, tokenize

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


def _unescape_string(tok: Token) -> str:
    body = tok.text[1:-1]
    if "\\" not in body:
        return body
    out, i = [], 0
    while i < len(body):
        c = body[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        nxt = body[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in "uU":
            width = 4 if nxt == "u" else 8
            digits = body[i + 2 : i + 2 + width]
            try:
                if len(digits) != width:
                    raise ValueError
                out.append(chr(int(digits, 16)))
            except ValueError:
                raise QuerySyntaxError("invalid unicode escape", tok.line, tok.column + i + 1) from None
            i += 2 + width
        else:
            raise QuerySyntaxError(f"invalid escape '\\{nxt}'", tok.line, tok.column + i + 1)
    return "".join(out)


class Parser:
    def __init__(self, text: str, prefixes: dict[str, str] | None = None):
        self.tokens = tokenize(text)
        self.pos = 0
        self.prefixes = dict(prefixes or {})

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _is(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def _accept(self, kind: str, text: str | None = None) -> Token | None:
        if self._is(kind, text):
            tok = self.tok
            self.pos += 1
            return tok
        return None

    def _error(self, expected, message: str | None = None):
        t = self.tok
        found = "end of query" if t.kind == "EOF" else repr(t.text)
        raise QuerySyntaxError(message or f"unexpected {found}", t.line, t.column, expected)

    def _expect(self, kind: str, text: str | None = None, label: str | None = None) -> Token:
        tok = self._accept(kind, text)
        if tok is None:
            self._error([label or text or kind])
        return tok

    # -- query ---------------------------------------------------------------

    def parse(self) -> Query:
        declared = {}
        while self._accept("KW", "PREFIX"):
            name = self.tok
            if name.kind != "PNAME" or not name.text.endswith(":") or name.text.count(":") != 1:
                self._error(["prefix name like 'ex:'"])
            self.pos += 1
            iri_tok = self._expect("IRI", label="<IRI>")
            declared[name.text[:-1]] = iri_tok.text[1:-1]
        self.prefixes.update(declared)

        if not self._is("KW", "SELECT"):
            self._error(["PREFIX", "SELECT"])
        self.pos += 1
        query = Query(where=GroupPattern(), prefixes=dict(self.prefixes))
        query.distinct = self._accept("KW", "DISTINCT") is not None
        query.projection = self._select_clause()
        self._accept("KW", "WHERE")
        if not self._is("OP", "{"):
            self._error(["WHERE", "{"])
        query.where = self._group()
        self._modifiers(query)
        if not self._is("EOF"):
            self._error(["GROUP BY", "ORDER BY", "LIMIT", "OFFSET", "end of query"])
        self._check(query)
        return query

    def _select_clause(self):
        if self._accept("OP", "*"):
            return None
        items = []
        while True:
            if self._is("VAR"):
                items.append(Var(self.tok.text[1:]))
                self.pos += 1
            elif self._is("OP", "("):
                items.append(self._count())
            else:
                break
        if not items:
            self._error(["*", "?variable", "(COUNT(...) AS ?v)"])
        if sum(isinstance(i, Count) for i in items) > 1:
            raise QuerySyntaxError("only one aggregate per query is supported", self.tok.line, self.tok.column)
        return items

    def _count(self) -> Count:
        self._expect("OP", "(")
        self._expect("KW", "COUNT")
        self._expect("OP", "(")
        distinct = self._accept("KW", "DISTINCT") is not None
        var = None
        if not self._accept("OP", "*"):
            if not self._is("VAR"):
                self._error(["*", "?variable"])
            var = Var(self.tok.text[1:])
            self.pos += 1
        self._expect("OP", ")")
        self._expect("KW", "AS")
        if not self._is("VAR"):
            self._error(["?variable"])
        alias = Var(self.tok.text[1:])
        self.pos += 1
        self._expect("OP", ")")
        return Count(alias=alias, var=var, distinct=distinct)

    def _modifiers(self, query: Query):
        if self._accept("KW", "GROUP"):
            self._expect("KW", "BY")
            while self._is("VAR"):
                query.group_by.append(Var(self.tok.text[1:]))
                self.pos += 1
            if not query.group_by:
                self._error(["?variable"])
        if self._accept("KW", "ORDER"):
            self._expect("KW", "BY")
            while True:
                if self._is("VAR"):
                    query.order_by.append((Var(self.tok.text[1:]), True))
                    self.pos += 1
                elif self._is("KW", "ASC") or self._is("KW", "DESC"):
                    ascending = self.tok.text == "ASC"
                    self.pos += 1
                    self._expect("OP", "(")
                    if not self._is("VAR"):
                        self._error(["?variable"])
                    query.order_by.append((Var(self.tok.text[1:]), ascending))
                    self.pos += 1
                    self._expect("OP", ")")
                else:
                    break
            if not query.order_by:
                self._error(["?variable", "ASC", "DESC"])
        while self._is("KW", "LIMIT") or self._is("KW", "OFFSET"):
            which = self.tok.text
            self.pos += 1
            n = self._expect("INTEGER", label="non-negative integer")
            if which == "LIMIT":
                query.limit = int(n.text)
            else:
                query.offset = int(n.text)

    # -- patterns ------------------------------------------------------------

    def _group(self) -> GroupPattern:
        self._expect("OP", "{")
        group = GroupPattern()
        while not self._accept("OP", "}"):
            if self._is("OP", "{"):
                branches = [self._group()]
                while self._accept("KW", "UNION"):
                    if not self._is("OP", "{"):
                        self._error(["{"])
                    branches.append(self._group())
                group.elements.append(branches[0] if len(branches) == 1 else UnionPattern(branches))
                self._accept("OP", ".")
            elif self._accept("KW", "FILTER"):
                if not self._is("OP", "("):
                    self._error(["("])
                self.pos += 1
                expr = self._expression()
                self._expect("OP", ")")
                group.elements.append(Filter(expr))
                self._accept("OP", ".")
            elif self._starts_node():
                self._triples(group)
            elif self._is("EOF"):
                self._error(["}"], "unterminated group pattern")
            else:
                self._error(["}", "{", "FILTER", "triple pattern"])
        return group

    def _starts_node(self) -> bool:
        t = self.tok
        return t.kind in ("VAR", "IRI", "PNAME", "STRING", "INTEGER", "DECIMAL", "DOUBLE", "A") or (
            t.kind == "KW" and t.text in ("TRUE", "FALSE")
        )

    def _triples(self, group: GroupPattern):
        subject = self._node("subject")
        while True:
            predicate = self._node("predicate")
            while True:
                obj = self._node("object")
                group.elements.append(TriplePattern(subject, predicate, obj))
                if not self._accept("OP", ","):
                    break
            if not self._accept("OP", ";"):
                break
            if self._is("OP", ".") or self._is("OP", "}"):
                break
        if not self._accept("OP", "."):
            if not (self._is("OP", "}") or self._is("OP", "{") or self._is("KW", "FILTER")):
                self._error([".", "}", ";", ","])

    def _node(self, position: str):
        t = self.tok
        if t.kind == "VAR":
            self.pos += 1
            return Var(t.text[1:])
        if t.kind == "A":
            if position != "predicate":
                self._error(["?variable", "IRI"], "keyword 'a' is only allowed as a predicate")
            self.pos += 1
            return IRI(RDF_TYPE)
        if t.kind in ("IRI", "PNAME"):
            return self._iri()
        if position == "object":
            if t.kind in ("STRING", "INTEGER", "DECIMAL", "DOUBLE") or (t.kind == "KW" and t.text in ("TRUE", "FALSE")):
                return self._literal()
            if t.kind == "OP" and t.text in "+-" and self.tokens[self.pos + 1].kind in ("INTEGER", "DECIMAL", "DOUBLE"):
                return self._literal()
        expected = ["?variable", "IRI", "prefixed name"] + (["literal"] if position == "object" else [])
        if position == "predicate":
            expected.append("a")
        self._error(expected, f"expected {position}, found " + ("end of query" if t.kind == "EOF" else repr(t.text)))

    def _iri(self) -> IRI:
        t = self.tok
        if t.kind == "IRI":
            value = t.text[1:-1]
        elif t.kind == "PNAME":
            prefix, _, local = t.text.partition(":")
            if prefix not in self.prefixes:
                declared = sorted(f"{name}:" for name in self.prefixes) or ["IRI"]
                raise QuerySyntaxError(f"unknown prefix '{prefix}:'", t.line, t.column, declared)
            value = self.prefixes[prefix] + local
        else:
            self._error(["IRI", "prefixed name"])
        self.pos += 1
        try:
            return IRI(value)
        except TermError as exc:
            raise QuerySyntaxError(str(exc), t.line, t.column) from None

    def _literal(self) -> Literal:
        t = self.tok
        sign = ""
        if t.kind == "OP":
            sign = "-" if t.text == "-" else ""
            self.pos += 1
            t = self.tok
        self.pos += 1
        if t.kind == "INTEGER":
            return Literal(sign + t.text, XSD_INTEGER)
        if t.kind == "DECIMAL":
            return Literal(sign + t.text, XSD_DECIMAL)
        if t.kind == "DOUBLE":
            return Literal(sign + t.text, XSD_DOUBLE)
        if t.kind == "KW":
            return Literal(t.text.lower(), XSD_BOOLEAN)
        lexical = _unescape_string(t)
        if self._is("LANGTAG"):
            tag = self.tok
            self.pos += 1
            return Literal(lexical, language=tag.text[1:])
        if self._accept("OP", "^^"):
            return Literal(lexical, self._iri().value)
        return Literal(lexical)

    # -- expressions ---------------------------------------------------------

    def _expression(self):
        left = self._and()
        while self._accept("OP", "||"):
            left = BinOp("||", left, self._and())
        return left

    def _and(self):
        left = self._relational()
        while self._accept("OP", "&&"):
            left = BinOp("&&", left, self._relational())
        return left

    def _relational(self):
        left = self._unary()
        t = self.tok
        if t.kind == "OP" and t.text in _COMPARISONS:
            self.pos += 1
            return BinOp(t.text, left, self._unary())
        if self._is("KW", "IN"):
            self.pos += 1
            return In(left, self._expr_list())
        if self._is("KW", "NOT") and self.tokens[self.pos + 1].text == "IN":
            self.pos += 2
            return In(left, self._expr_list(), negated=True)
        return left

    def _expr_list(self) -> tuple:
        self._expect("OP", "(")
        items = []
        if not self._accept("OP", ")"):
            items.append(self._expression())
            while self._accept("OP", ","):
                items.append(self._expression())
            self._expect("OP", ")")
        return tuple(items)

    def _unary(self):
        if self._accept("OP", "!"):
            return Not(self._unary())
        return self._primary()

    def _primary(self):
        t = self.tok
        if self._accept("OP", "("):
            inner = self._expression()
            self._expect("OP", ")")
            return inner
        if t.kind == "VAR":
            self.pos += 1
            return Var(t.text[1:])
        if t.kind in ("IRI", "PNAME"):
            return Const(self._iri())
        if t.kind in ("STRING", "INTEGER", "DECIMAL", "DOUBLE") or (t.kind == "KW" and t.text in ("TRUE", "FALSE")):
            return Const(self._literal())
        if t.kind == "OP" and t.text in "+-" and self.tokens[self.pos + 1].kind in ("INTEGER", "DECIMAL", "DOUBLE"):
            return Const(self._literal())
        self._error(["?variable", "IRI", "literal", "(", "!"], "expected an expression, found " + (
            "end of query" if t.kind == "EOF" else repr(t.text)))

    # -- static checks -------------------------------------------------------

    def _check(self, query: Query):
        in_scope = set(query.where.variables())
        eof = self.tok
        agg = query.aggregate
        if query.projection is not None:
            for item in query.projection:
                names = []
                if isinstance(item, Var):
                    names.append(item.name)
                elif item.var is not None:
                    names.append(item.var.name)
                for name in names:
                    if name not in in_scope:
                        raise QuerySyntaxError(
                            f"projected variable ?{name} does not occur in the WHERE pattern", eof.line, eof.column
                        )
        grouped = {v.name for v in query.group_by}
        for v in query.group_by:
            if v.name not in in_scope:
                raise QuerySyntaxError(f"GROUP BY variable ?{v.name} does not occur in the WHERE pattern", eof.line, eof.column)
        if agg is not None or query.group_by:
            if query.projection is None:
                raise QuerySyntaxError("SELECT * cannot be combined with GROUP BY", eof.line, eof.column)
            for item in query.projection:
                if isinstance(item, Var) and item.name not in grouped:
                    raise QuerySyntaxError(
                        f"?{item.name} must appear in GROUP BY when aggregating", eof.line, eof.column
                    )
        _filter_warnings(query.where, set(), query.warnings)


def _filter_warnings(group: GroupPattern, outer: set, warnings: list):
    bound = set(group.variables())
    for e in group.elements:
        if isinstance(e, Filter):
            for name in sorted(expr_variables(e.expr) - bound):
                warnings.append(f"FILTER references ?{name}, which is never bound in its group")
        elif isinstance(e, UnionPattern):
            for b in e.branches:
                _filter_warnings(b, bound, warnings)
        elif isinstance(e, GroupPattern):
            _filter_warnings(e, bound, warnings)


def parse_query(text: str, prefixes: dict[str, str] | None = None) -> Query:
    """Parse query text. ``prefixes`` pre-declares namespaces (query PREFIXes win)."""
    return Parser(text, prefixes).parse()


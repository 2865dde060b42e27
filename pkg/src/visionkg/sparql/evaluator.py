"""Evaluation of parsed queries against a store snapshot.

Solutions are bags. Output order is always deterministic: ORDER BY keys
first, then the canonical N-Triples text of the projected row, then of the
whole solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from ..ntriples import serialize_term
from ..store import Snapshot
from ..terms import (
    IRI,
    RDF_LANGSTRING,
    XSD,
    XSD_BOOLEAN,
    XSD_INTEGER,
    XSD_STRING,
    BlankNode,
    Literal,
    Term,
)
from .ast import BinOp, Const, Count, Filter, GroupPattern, In, Not, Query, TriplePattern, UnionPattern, Var
from .planner import encode, plan_order

DEFAULT_ROW_CAP = 1_000_000

NUMERIC_TYPES = frozenset(
    XSD + t
    for t in (
        "integer", "decimal", "double", "float", "long", "int", "short", "byte",
        "nonNegativeInteger", "positiveInteger", "negativeInteger", "nonPositiveInteger",
        "unsignedLong", "unsignedInt", "unsignedShort", "unsignedByte",
    )
)  # fmt: skip


class QueryTooLarge(RuntimeError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"query produced more than {cap} intermediate rows")


@dataclass
class SolutionSequence:
    variables: list[str]
    rows: list[tuple] = field(default_factory=list)
    type_errors: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[dict[str, Term]]:
        for row in self.rows:
            yield {v: t for v, t in zip(self.variables, row) if t is not None}

    def column(self, name: str) -> list[Optional[Term]]:
        i = self.variables.index(name)
        return [row[i] for row in self.rows]


class _ExprError(Exception):
    pass


def numeric_value(term: Literal) -> Fraction:
    lex = term.lexical.strip()
    try:
        if term.datatype in (XSD + "double", XSD + "float"):
            return Fraction(float(lex))
        return Fraction(lex)
    except (ValueError, ZeroDivisionError, OverflowError):
        raise _ExprError(f"invalid numeric literal {lex!r}") from None


def _category(value):
    """Classify a value for comparison: (category, comparable payload)."""
    if isinstance(value, bool):
        return "bool", value
    if isinstance(value, IRI):
        return "iri", value.value
    if isinstance(value, BlankNode):
        return "bnode", value.label
    dt = value.datatype
    if dt in NUMERIC_TYPES:
        return "num", numeric_value(value)
    if dt == XSD_STRING:
        return "str", value.lexical
    if dt == RDF_LANGSTRING:
        return "lang", (value.lexical, value.language.lower())
    if dt == XSD_BOOLEAN:
        if value.lexical in ("true", "1"):
            return "bool", True
        if value.lexical in ("false", "0"):
            return "bool", False
        raise _ExprError(f"invalid boolean {value.lexical!r}")
    return "other", (value.lexical, dt)


def _ebv(value) -> bool:
    cat, v = _category(value)
    if cat == "bool":
        return v
    if cat == "num":
        return v != 0
    if cat in ("str",):
        return v != ""
    if cat == "lang":
        return v[0] != ""
    raise _ExprError(f"no effective boolean value for {cat}")


def _equal(a, b) -> bool:
    ca, va = _category(a)
    cb, vb = _category(b)
    if ca != cb:
        raise _ExprError(f"cannot compare {ca} with {cb}")
    if ca == "other" and va != vb:
        raise _ExprError("cannot compare literals of unknown datatype")
    return va == vb


def _compare(op: str, a, b) -> bool:
    if op == "=":
        return _equal(a, b)
    if op == "!=":
        return not _equal(a, b)
    ca, va = _category(a)
    cb, vb = _category(b)
    if ca != cb or ca not in ("num", "str", "iri", "bool"):
        raise _ExprError(f"cannot order {ca} against {cb}")
    if op == "<":
        return va < vb
    if op == "<=":
        return va <= vb
    if op == ">":
        return va > vb
    return va >= vb


def evaluate_expression(expr, row: dict[str, Term]):
    """Evaluate ``expr`` on one solution; raises on type errors and unbound variables."""
    if isinstance(expr, Var):
        value = row.get(expr.name)
        if value is None:
            raise _ExprError(f"unbound variable ?{expr.name}")
        return value
    if isinstance(expr, Const):
        return expr.term
    if isinstance(expr, Not):
        return not _ebv(evaluate_expression(expr.operand, row))
    if isinstance(expr, BinOp):
        if expr.op in ("&&", "||"):
            results = []
            for side in (expr.left, expr.right):
                try:
                    results.append(_ebv(evaluate_expression(side, row)))
                except _ExprError:
                    results.append(None)
            if expr.op == "&&":
                if False in results:
                    return False
                if None in results:
                    raise _ExprError("error in conjunction")
                return True
            if True in results:
                return True
            if None in results:
                raise _ExprError("error in disjunction")
            return False
        return _compare(expr.op, evaluate_expression(expr.left, row), evaluate_expression(expr.right, row))
    if isinstance(expr, In):
        left = evaluate_expression(expr.operand, row)
        errored = False
        for item in expr.items:
            try:
                if _equal(left, evaluate_expression(item, row)):
                    return not expr.negated
            except _ExprError:
                errored = True
        if errored:
            raise _ExprError("error in IN list")
        return expr.negated
    raise TypeError(f"unknown expression node {expr!r}")


def order_key(term: Optional[Term]):
    """Total order over terms: unbound < blank nodes < IRIs < numbers < other literals."""
    if term is None:
        return (0,)
    if isinstance(term, BlankNode):
        return (1, term.label)
    if isinstance(term, IRI):
        return (2, term.value)
    if term.datatype in NUMERIC_TYPES:
        try:
            return (3, numeric_value(term), term.lexical)
        except _ExprError:
            pass
    return (4, term.lexical, term.datatype, term.language or "")


class Evaluator:
    def __init__(self, snapshot: Snapshot, row_cap: int = DEFAULT_ROW_CAP):
        self.snapshot = snapshot
        self.row_cap = row_cap
        self.type_errors = 0

    def _cap(self, rows):
        if len(rows) > self.row_cap:
            raise QueryTooLarge(self.row_cap)
        return rows

    # -- patterns (rows map variable name -> term id) --------------------------

    def bgp(self, patterns: list[TriplePattern]) -> list[dict]:
        snap = self.snapshot
        encoded = [encode(p, snap) for p in patterns]
        if any(e is None for e in encoded):
            return []
        rows = [{}]
        for i in plan_order(encoded, snap):
            pattern = encoded[i]
            out = []
            for row in rows:
                key = []
                free = []
                for pos, (kind, value) in enumerate(pattern):
                    if kind == "c":
                        key.append(value)
                    elif value in row:
                        key.append(row[value])
                    else:
                        key.append(None)
                        free.append((pos, value))
                for triple in snap.match(*key):
                    new = dict(row)
                    ok = True
                    for pos, name in free:
                        tid = triple[pos]
                        prev = new.get(name)
                        if prev is None:
                            new[name] = tid
                        elif prev != tid:
                            ok = False
                            break
                    if ok:
                        out.append(new)
            rows = self._cap(out)
            if not rows:
                break
        return rows

    def group(self, group: GroupPattern) -> list[dict]:
        patterns = group.triple_patterns()
        rows = self.bgp(patterns) if patterns else [{}]
        for element in group.elements:
            if not rows:
                break
            if isinstance(element, UnionPattern):
                other = []
                for branch in element.branches:
                    other.extend(self.group(branch))
                    self._cap(other)
                rows = self._cap(join(rows, other))
            elif isinstance(element, GroupPattern):
                rows = self._cap(join(rows, self.group(element)))
        filters = [e.expr for e in group.elements if isinstance(e, Filter)]
        if filters and rows:
            resolve = self.snapshot.resolve
            kept = []
            for row in rows:
                terms = {k: resolve(v) for k, v in row.items()}
                if all(self._holds(f, terms) for f in filters):
                    kept.append(row)
            rows = kept
        return rows

    def _holds(self, expr, terms) -> bool:
        try:
            return _ebv(evaluate_expression(expr, terms))
        except _ExprError:
            self.type_errors += 1
            return False

    # -- query ---------------------------------------------------------------

    def _text(self, term) -> str:
        return "" if term is None else serialize_term(term)

    def query(self, query: Query) -> SolutionSequence:
        resolve = self.snapshot.resolve
        rows = [{k: resolve(v) for k, v in row.items()} for row in self.group(query.where)]
        agg = query.aggregate
        if agg is not None or query.group_by:
            rows = self._aggregate(rows, query.group_by, agg)
        variables = query.result_variables()

        def full_text(row):
            return tuple((k, self._text(row[k])) for k in sorted(row))

        keyed = [
            (tuple(self._text(row.get(v)) for v in variables), full_text(row), row) for row in rows
        ]
        keyed.sort(key=lambda item: (item[0], item[1]))
        for var, ascending in reversed(query.order_by):
            keyed.sort(key=lambda item: order_key(item[2].get(var.name)), reverse=not ascending)

        out = [tuple(row.get(v) for v in variables) for _, _, row in keyed]
        if query.distinct:
            seen = set()
            unique = []
            for row in out:
                if row not in seen:
                    seen.add(row)
                    unique.append(row)
            out = unique
        start = query.offset or 0
        stop = None if query.limit is None else start + query.limit
        return SolutionSequence(variables, out[start:stop], self.type_errors)

    def _aggregate(self, rows, group_by: list[Var], agg: Count | None) -> list[dict]:
        groups: dict[tuple, list] = {}
        for row in rows:
            groups.setdefault(tuple(row.get(v.name) for v in group_by), []).append(row)
        if not group_by and not groups:
            groups[()] = []
        out = []
        for key, members in groups.items():
            result = {v.name: t for v, t in zip(group_by, key) if t is not None}
            if agg is not None:
                if agg.var is None:
                    values = [tuple(sorted(m.items(), key=lambda kv: kv[0])) for m in members]
                else:
                    values = [m[agg.var.name] for m in members if m.get(agg.var.name) is not None]
                n = len(set(values)) if agg.distinct else len(values)
                result[agg.alias.name] = Literal(str(n), XSD_INTEGER)
            out.append(result)
        return out


def join(left: list[dict], right: list[dict]) -> list[dict]:
    """Bag join of two solution lists on their compatible shared variables."""
    if not left or not right:
        return []
    left_vars = set.intersection(*(set(r) for r in left))
    right_vars = set.intersection(*(set(r) for r in right))
    certain = sorted(left_vars & right_vars)
    buckets: dict[tuple, list] = {}
    for r in right:
        buckets.setdefault(tuple(r[v] for v in certain), []).append(r)
    out = []
    for l in left:
        for r in buckets.get(tuple(l[v] for v in certain), ()):
            if all(l[k] == v for k, v in r.items() if k in l):
                merged = dict(l)
                merged.update(r)
                out.append(merged)
    return out


def evaluate(snapshot: Snapshot, query: Query, row_cap: int = DEFAULT_ROW_CAP) -> SolutionSequence:
    return Evaluator(snapshot, row_cap).query(query)

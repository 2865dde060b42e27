"""Independent reference implementations used by the tests.

Nothing here touches the store indexes, the planner or the engine's
expression evaluator: queries are answered by scanning a plain list of
triples, and materialization by re-joining everything until nothing changes.
"""

from __future__ import annotations

import random
from collections import Counter
from decimal import Decimal, InvalidOperation

import numpy as np

from visionkg.sparql.ast import Const, Filter, GroupPattern, In, Not, TriplePattern, UnionPattern, Var
from visionkg.terms import IRI, RDF_TYPE, RDFS_SUBCLASSOF, XSD, BlankNode, Literal

EX = "http://example.org/"
TYPE = IRI(RDF_TYPE)
SUBCLASS = IRI(RDFS_SUBCLASSOF)

# -- naive query evaluation --------------------------------------------------


class _Err(Exception):
    pass


_NUMERIC = {XSD + t for t in ("integer", "decimal", "double", "float", "int", "long")}


def _value(term):
    if isinstance(term, IRI):
        return ("iri", term.value)
    if isinstance(term, BlankNode):
        return ("bnode", term.label)
    if term.datatype in _NUMERIC:
        try:
            return ("num", Decimal(term.lexical))
        except InvalidOperation:
            raise _Err() from None
    if term.datatype == XSD + "string":
        return ("str", term.lexical)
    if term.language:
        return ("lang", (term.lexical, term.language.lower()))
    if term.datatype == XSD + "boolean":
        return ("bool", {"true": True, "1": True, "false": False, "0": False}[term.lexical])
    return ("other", (term.lexical, term.datatype))


def _truth(v):
    kind, x = _value(v) if not isinstance(v, bool) else ("bool", v)
    if kind == "bool":
        return x
    if kind == "num":
        return x != 0
    if kind == "str":
        return x != ""
    if kind == "lang":
        return x[0] != ""
    raise _Err()


def _same(a, b):
    (ka, xa), (kb, xb) = _value(a), _value(b)
    if ka != kb or (ka == "other" and xa != xb):
        raise _Err()
    return xa == xb


def _eval(expr, row):
    if isinstance(expr, Var):
        if expr.name not in row:
            raise _Err()
        return row[expr.name]
    if isinstance(expr, Const):
        return expr.term
    if isinstance(expr, Not):
        return not _truth(_eval(expr.operand, row))
    if isinstance(expr, In):
        left = _eval(expr.operand, row)
        hit, err = False, False
        for item in expr.items:
            try:
                hit = hit or _same(left, _eval(item, row))
            except _Err:
                err = True
        if hit:
            return not expr.negated
        if err:
            raise _Err()
        return expr.negated
    if expr.op in ("&&", "||"):
        sides = []
        for side in (expr.left, expr.right):
            try:
                sides.append(_truth(_eval(side, row)))
            except _Err:
                sides.append("E")
        if expr.op == "&&":
            if False in sides:
                return False
            if "E" in sides:
                raise _Err()
            return True
        if True in sides:
            return True
        if "E" in sides:
            raise _Err()
        return False
    a, b = _eval(expr.left, row), _eval(expr.right, row)
    if expr.op == "=":
        return _same(a, b)
    if expr.op == "!=":
        return not _same(a, b)
    (ka, xa), (kb, xb) = _value(a), _value(b)
    if ka != kb or ka not in ("num", "str", "iri", "bool"):
        raise _Err()
    return {"<": xa < xb, "<=": xa <= xb, ">": xa > xb, ">=": xa >= xb}[expr.op]


def _compatible(a, b):
    return all(b[k] == v for k, v in a.items() if k in b)


def _scan(triples, pattern):
    """Every binding of one triple pattern, by a full scan."""
    out = []
    for triple in triples:
        row = {}
        ok = True
        for node, term in zip((pattern.s, pattern.p, pattern.o), triple):
            if isinstance(node, Var):
                if row.setdefault(node.name, term) != term:
                    ok = False
                    break
            elif node != term:
                ok = False
                break
        if ok:
            out.append(row)
    return out


def _cross(left, right):
    return [{**a, **b} for a in left for b in right if _compatible(a, b)]


def _group(triples, group):
    rows = [{}]
    for element in group.elements:
        if isinstance(element, TriplePattern):
            rows = _cross(rows, _scan(triples, element))
    for element in group.elements:
        if isinstance(element, UnionPattern):
            rows = _cross(rows, [r for b in element.branches for r in _group(triples, b)])
        elif isinstance(element, GroupPattern):
            rows = _cross(rows, _group(triples, element))
    kept = []
    for row in rows:
        ok = True
        for element in group.elements:
            if isinstance(element, Filter):
                try:
                    ok = _truth(_eval(element.expr, row))
                except _Err:
                    ok = False
                if not ok:
                    break
        if ok:
            kept.append(row)
    return kept


def naive_evaluate(triples, query) -> Counter:
    """Multiset of projected result rows (tuples aligned with ``query.result_variables()``)."""
    triples = list(triples)
    rows = _group(triples, query.where)
    agg = query.aggregate
    if agg is not None or query.group_by:
        groups = {}
        for row in rows:
            groups.setdefault(tuple(row.get(v.name) for v in query.group_by), []).append(row)
        if not query.group_by and not rows:
            groups[()] = []
        rows = []
        for key, members in groups.items():
            out = {v.name: t for v, t in zip(query.group_by, key) if t is not None}
            if agg is not None:
                if agg.var is None:
                    vals = [frozenset(m.items()) for m in members]
                else:
                    vals = [m[agg.var.name] for m in members if agg.var.name in m]
                n = len(set(vals)) if agg.distinct else len(vals)
                out[agg.alias.name] = Literal(str(n), XSD + "integer")
            rows.append(out)
    names = query.result_variables()
    projected = [tuple(r.get(v) for v in names) for r in rows]
    if query.distinct:
        projected = list(dict.fromkeys(projected))
    return Counter(projected)


# -- naive RDFS fixpoint -----------------------------------------------------


def naive_materialize(triples) -> set:
    """Apply rdfs9 and rdfs11 to the whole set until no new triple appears.

    Every round re-joins all triples (no delta tracking), which is what makes
    it a useful check on the semi-naive loop.
    """
    closed = set(triples)
    while True:
        supers = {}
        for s, p, o in closed:
            if p == SUBCLASS:
                supers.setdefault(s, set()).add(o)
        new = set()
        for s, p, o in closed:
            if p == SUBCLASS:
                new.update((s, SUBCLASS, e) for e in supers.get(o, ()))
            elif p == TYPE:
                new.update((s, TYPE, d) for d in supers.get(o, ()))
        if new <= closed:
            return closed
        closed |= new


def reachability(n: int, edges) -> np.ndarray:
    """Transitive (non-reflexive) closure of a graph on nodes 0..n-1 by repeated squaring."""
    m = np.zeros((n, n), dtype=bool)
    for a, b in edges:
        m[a, b] = True
    while True:
        nxt = m | ((m.astype(np.int64) @ m.astype(np.int64)) > 0)
        if (nxt == m).all():
            return m
        m = nxt


def random_dag(rng: random.Random, n_classes: int, n_edges: int):
    """Edges (child, parent) with child index > parent index, so always acyclic."""
    edges = set()
    possible = n_classes * (n_classes - 1) // 2
    target = min(n_edges, possible)
    while len(edges) < target:
        a, b = rng.sample(range(n_classes), 2)
        edges.add((max(a, b), min(a, b)))
    return sorted(edges)


# -- random stores for the query suite ---------------------------------------


def random_triples(rng: random.Random, size: int):
    """Triples over a small vocabulary so that joins and filters hit often."""
    subjects = [IRI(f"{EX}s{i}") for i in range(12)] + [BlankNode(f"b{i}") for i in range(2)]
    predicates = [IRI(f"{EX}p{i}") for i in range(4)]
    classes = [IRI(f"{EX}C{i}") for i in range(3)]
    literals = (
        [Literal(str(i), XSD + "integer") for i in range(6)]
        + [Literal("1.5", XSD + "decimal"), Literal("2.0E0", XSD + "double")]
        + [Literal(s) for s in ("a", "b", "")]
        + [Literal("a", language="en"), Literal("true", XSD + "boolean")]
    )
    objects = subjects + literals
    out = set()
    attempts = 0
    while len(out) < size and attempts < size * 20:
        attempts += 1
        s = rng.choice(subjects)
        if rng.random() < 0.2:
            out.add((s, TYPE, rng.choice(classes)))
        else:
            out.add((s, rng.choice(predicates), rng.choice(objects)))
    return sorted(out, key=repr)

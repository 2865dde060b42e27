"""Dictionary-encoded triple store with SPO/POS/OSP sorted indexes.

Terms are interned to dense integer ids in first-intern order. Triples are
kept as id tuples in three sorted lists; a pattern lookup is a binary search
for the bound prefix in whichever ordering puts the bound positions first.

Mutations are buffered and folded into fresh index lists when a snapshot is
taken, so a published snapshot never sees later inserts.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Iterator, Optional

from .terms import IRI, BlankNode, Literal, Term, TermError

Triple = tuple[int, int, int]
Pattern = tuple[Optional[int], Optional[int], Optional[int]]

_IRI, _BNODE, _LITERAL = 0, 1, 2


class StoreConsistencyError(RuntimeError):
    """A triple references a term id the dictionary does not know."""


def _kind(term: Term) -> int:
    if isinstance(term, IRI):
        return _IRI
    if isinstance(term, BlankNode):
        return _BNODE
    if isinstance(term, Literal):
        return _LITERAL
    raise TermError("term", f"not an RDF term: {term!r}")


class TripleStore:
    """Single-writer store. Readers should work on :meth:`snapshot` views."""

    def __init__(self):
        self._ids: dict[Term, int] = {}
        self._terms: list[Term] = []
        self._kinds: list[int] = []
        self._triples: set[Triple] = set()
        self._pending: list[Triple] = []
        self._spo: list[Triple] = []
        self._pos: list[Triple] = []
        self._osp: list[Triple] = []
        self.generation = 0
        self._snapshot: Snapshot | None = None

    def __len__(self) -> int:
        return len(self._triples)

    @property
    def triple_count(self) -> int:
        return len(self._triples)

    def intern(self, term: Term) -> int:
        tid = self._ids.get(term)
        if tid is None:
            kind = _kind(term)
            tid = len(self._terms)
            self._ids[term] = tid
            self._terms.append(term)
            self._kinds.append(kind)
        return tid

    def lookup(self, term: Term) -> int | None:
        return self._ids.get(term)

    def resolve(self, tid: int) -> Term:
        return self._terms[tid]

    @property
    def term_count(self) -> int:
        return len(self._terms)

    def insert(self, s: int, p: int, o: int) -> bool:
        """Insert an id triple; False if it was already present."""
        triple = (s, p, o)
        if triple in self._triples:
            return False
        n = len(self._kinds)
        for tid in triple:
            if not (isinstance(tid, int) and 0 <= tid < n):
                raise StoreConsistencyError(f"unknown term id {tid!r}")
        if self._kinds[s] == _LITERAL:
            raise TermError("subject", f"literal in subject position: {self._terms[s]!r}")
        if self._kinds[p] != _IRI:
            raise TermError("predicate", f"predicate must be an IRI: {self._terms[p]!r}")
        self._triples.add(triple)
        self._pending.append(triple)
        self.generation += 1
        return True

    def add(self, s: Term, p: Term, o: Term) -> bool:
        """Intern three terms and insert them as a triple."""
        if isinstance(s, Literal):
            raise TermError("subject", f"literal in subject position: {s!r}")
        if not isinstance(p, IRI):
            raise TermError("predicate", f"predicate must be an IRI: {p!r}")
        # The ids were just interned from checked terms, so skip insert()'s validation.
        ids = self._ids
        si = ids.get(s)
        pi = ids.get(p)
        oi = ids.get(o)
        triple = (
            self.intern(s) if si is None else si,
            self.intern(p) if pi is None else pi,
            self.intern(o) if oi is None else oi,
        )
        if triple in self._triples:
            return False
        self._triples.add(triple)
        self._pending.append(triple)
        self.generation += 1
        return True

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def triples(self) -> Iterator[tuple[Term, Term, Term]]:
        """All triples as terms, in SPO id order."""
        terms = self._terms
        for s, p, o in self.snapshot()._spo:
            yield terms[s], terms[p], terms[o]

    def snapshot(self) -> Snapshot:
        if self._pending:
            new = sorted(self._pending)
            self._spo = sorted(self._spo + new)
            self._pos = sorted(self._pos + [(p, o, s) for s, p, o in new])
            self._osp = sorted(self._osp + [(o, s, p) for s, p, o in new])
            self._pending = []
        snap = self._snapshot
        if snap is None or snap.generation != self.generation:
            snap = Snapshot(self, self._spo, self._pos, self._osp, self.generation)
            self._snapshot = snap
        return snap

    def match(self, s=None, p=None, o=None) -> Iterator[Triple]:
        return self.snapshot().match(s, p, o)

    def count(self, s=None, p=None, o=None) -> int:
        return self.snapshot().count(s, p, o)


def _to_spo(order: int, t: Triple) -> Triple:
    if order == 0:
        return t
    if order == 1:
        return (t[2], t[0], t[1])
    return (t[1], t[2], t[0])


class Snapshot:
    """Immutable read view of a store at one generation."""

    def __init__(self, store: TripleStore, spo, pos, osp, generation: int):
        self._store = store
        self._spo = spo
        self._pos = pos
        self._osp = osp
        self.generation = generation
        self._n_terms = len(store._terms)
        self._distinct_cache: dict = {}

    def __len__(self) -> int:
        return len(self._spo)

    def resolve(self, tid: int) -> Term:
        return self._store._terms[tid]

    def lookup(self, term: Term) -> int | None:
        tid = self._store._ids.get(term)
        if tid is None or tid >= self._n_terms:
            return None
        return tid

    def _range(self, s, p, o):
        # Pick the ordering whose leading positions are all bound.
        if s is not None:
            if p is not None:
                index, order, prefix = self._spo, 0, (s, p) if o is None else (s, p, o)
            elif o is not None:
                index, order, prefix = self._osp, 2, (o, s)
            else:
                index, order, prefix = self._spo, 0, (s,)
        elif p is not None:
            index, order, prefix = self._pos, 1, (p,) if o is None else (p, o)
        elif o is not None:
            index, order, prefix = self._osp, 2, (o,)
        else:
            return self._spo, 0, 0, len(self._spo)
        lo = bisect_left(index, prefix)
        upper = prefix[:-1] + (prefix[-1] + 1,)
        hi = bisect_left(index, upper, lo)
        return index, order, lo, hi

    def match(self, s=None, p=None, o=None) -> Iterator[Triple]:
        """Triples matching the pattern (``None`` is a wildcard), as SPO tuples."""
        index, order, lo, hi = self._range(s, p, o)
        if order == 0:
            return iter(index[lo:hi])
        return (_to_spo(order, t) for t in index[lo:hi])

    def count(self, s=None, p=None, o=None) -> int:
        _, _, lo, hi = self._range(s, p, o)
        return hi - lo

    def distinct(self, position: int, s=None, p=None, o=None) -> int:
        """Number of distinct ids at ``position`` (0=S, 1=P, 2=O) among matches."""
        key = (position, s, p, o)
        hit = self._distinct_cache.get(key)
        if hit is None:
            hit = len({t[position] for t in self.match(s, p, o)})
            self._distinct_cache[key] = hit
        return hit

    def triples(self) -> Iterator[tuple[Term, Term, Term]]:
        terms = self._store._terms
        for s, p, o in self._spo:
            yield terms[s], terms[p], terms[o]

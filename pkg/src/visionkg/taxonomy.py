"""Label alignment, the class hierarchy, and RDFS type materialization."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from . import vocab
from .ntriples import parse_ntriples
from .store import TripleStore
from .terms import IRI, RDFS_SUBCLASSOF, TermError

log = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_ALIGNMENT = DATA_DIR / "alignments.tsv"
DEFAULT_TAXONOMY = DATA_DIR / "taxonomy.nt"


class AlignmentError(ValueError):
    pass


class TaxonomyError(ValueError):
    pass


class TaxonomyCycleError(TaxonomyError):
    def __init__(self, cycle: list):
        self.cycle = cycle
        names = " -> ".join(str(c) for c in cycle)
        super().__init__(f"subClassOf cycle: {names}")


def _expand(value: str) -> str:
    prefix, sep, local = value.partition(":")
    if sep and prefix in vocab.PREFIXES and not local.startswith("//"):
        return vocab.PREFIXES[prefix] + local
    return value


@dataclass
class AlignmentTable:
    """Maps (dataset key, raw label) to a canonical class; ``*`` rows apply to every dataset."""

    entries: dict[tuple[str, str], IRI] = field(default_factory=dict)
    defaults: dict[str, IRI] = field(default_factory=dict)

    def align(self, dataset_key: str, raw_label: str) -> IRI | None:
        label = raw_label.strip().lower()
        hit = self.entries.get((dataset_key, label))
        if hit is None:
            hit = self.defaults.get(label)
        return hit

    def classes(self) -> set[IRI]:
        return set(self.entries.values()) | set(self.defaults.values())

    def missing_from(self, taxonomy: TaxonomyGraph) -> list[IRI]:
        """Aligned classes that the taxonomy does not mention."""
        return sorted((c for c in self.classes() if c not in taxonomy.nodes), key=str)


def parse_alignment(text: str, source: str = "<alignment>") -> AlignmentTable:
    table = AlignmentTable()
    seen: dict[tuple[str, str], int] = {}
    duplicates = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise AlignmentError(f"{source}:{lineno}: expected 3 tab-separated columns, got {len(cols)}")
        dataset, label, cls = (c.strip() for c in cols)
        label = label.lower()
        if not label:
            raise AlignmentError(f"{source}:{lineno}: empty raw label")
        try:
            target = IRI(_expand(cls))
        except TermError:
            raise AlignmentError(f"{source}:{lineno}: class IRI is not absolute: {cls!r}") from None
        key = (dataset, label)
        if key in seen:
            duplicates.append(f"{dataset}\t{label} (lines {seen[key]} and {lineno})")
            continue
        seen[key] = lineno
        if dataset == "*":
            table.defaults[label] = target
        else:
            table.entries[key] = target
    if duplicates:
        raise AlignmentError(f"{source}: duplicate alignment rows: " + "; ".join(duplicates))
    return table


def load_alignment(path=DEFAULT_ALIGNMENT) -> AlignmentTable:
    path = Path(path)
    return parse_alignment(path.read_text(encoding="utf-8"), str(path))


@dataclass
class TaxonomyGraph:
    nodes: set[IRI] = field(default_factory=set)
    edges: set[tuple[IRI, IRI]] = field(default_factory=set)

    def __post_init__(self):
        self._parents = None

    def parents(self) -> dict[IRI, set[IRI]]:
        if self._parents is None:
            parents = defaultdict(set)
            for sub, sup in self.edges:
                parents[sub].add(sup)
            self._parents = parents
        return self._parents

    def ancestors(self, cls: IRI) -> set[IRI]:
        return subclass_closure(self, cls)

    def descendants(self, cls: IRI) -> set[IRI]:
        children = defaultdict(set)
        for sub, sup in self.edges:
            children[sup].add(sub)
        return _reach(children, cls)


def _reach(adjacency, start) -> set:
    seen = set()
    stack = [start]
    while stack:
        for nxt in adjacency.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    seen.discard(start)
    return seen


def subclass_closure(taxonomy: TaxonomyGraph, cls: IRI) -> set[IRI]:
    """All strict ancestors of ``cls`` under transitive subClassOf."""
    return _reach(taxonomy.parents(), cls)


def find_cycle(edges) -> list | None:
    """Return one cycle as ``[a, b, ..., a]``, or None. Self-loops are ignored."""
    adjacency = defaultdict(list)
    for sub, sup in edges:
        if sub != sup:
            adjacency[sub].append(sup)
    for key in adjacency:
        adjacency[key].sort(key=str)
    WHITE, GREY, BLACK = 0, 1, 2
    color = defaultdict(int)
    for root in sorted(adjacency, key=str):
        if color[root] != WHITE:
            continue
        path = [root]
        color[root] = GREY
        stack = [iter(adjacency[root])]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                color[path.pop()] = BLACK
                stack.pop()
            elif color[nxt] == GREY:
                return path[path.index(nxt) :] + [nxt]
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append(iter(adjacency[nxt]))
    return None


def taxonomy_from_text(text: str) -> TaxonomyGraph:
    graph = TaxonomyGraph()
    for s, p, o in parse_ntriples(text, strict=True).triples:
        if p.value != RDFS_SUBCLASSOF:
            raise TaxonomyError(f"taxonomy may only contain rdfs:subClassOf statements, found <{p}>")
        if not isinstance(s, IRI) or not isinstance(o, IRI):
            raise TaxonomyError(f"subClassOf endpoints must be IRIs: {s!r} {o!r}")
        graph.nodes.update((s, o))
        if s != o:
            graph.edges.add((s, o))
    cycle = find_cycle(graph.edges)
    if cycle:
        raise TaxonomyCycleError(cycle)
    return graph


def load_taxonomy(store: TripleStore | None, path=DEFAULT_TAXONOMY) -> TaxonomyGraph:
    """Read a subClassOf-only N-Triples file and insert its edges into ``store``."""
    graph = taxonomy_from_text(Path(path).read_text(encoding="utf-8"))
    if store is not None:
        inserted = sum(store.add(sub, vocab.SUBCLASS_OF, sup) for sub, sup in sorted(graph.edges, key=str))
        log.debug("loaded %d subclass edges (%d new)", len(graph.edges), inserted)
    return graph


@dataclass
class MaterializationReport:
    inferred_type_triples: int = 0
    inferred_subclass_triples: int = 0
    iterations: int = 0

    @property
    def total(self) -> int:
        return self.inferred_type_triples + self.inferred_subclass_triples


def materialize(store: TripleStore, taxonomy: TaxonomyGraph | None = None) -> MaterializationReport:
    """Close the store under rdfs11 (subclass transitivity) and rdfs9 (type propagation).

    Semi-naive: each round joins only the previous round's new facts against
    the accumulated relations. If ``taxonomy`` is given its edges are added to
    the store first.
    """
    if taxonomy is not None:
        cycle = find_cycle(taxonomy.edges)
        if cycle:
            raise TaxonomyCycleError(cycle)
        for sub, sup in sorted(taxonomy.edges, key=str):
            store.add(sub, vocab.SUBCLASS_OF, sup)

    snap = store.snapshot()
    type_id = snap.lookup(vocab.TYPE)
    sc_id = snap.lookup(vocab.SUBCLASS_OF)
    report = MaterializationReport()
    if sc_id is None and type_id is None:
        report.iterations = 1 if len(snap) else 0
        return report

    sub_edges = set()
    if sc_id is not None:
        sub_edges = {(s, o) for s, _, o in snap.match(p=sc_id) if s != o}
    cycle = find_cycle(sub_edges)
    if cycle:
        raise TaxonomyCycleError([snap.resolve(c) for c in cycle])
    types = set()
    if type_id is not None:
        types = {(s, o) for s, _, o in snap.match(p=type_id)}

    supers = defaultdict(set)  # class -> direct-or-derived superclasses
    subs = defaultdict(set)
    for c, d in sub_edges:
        supers[c].add(d)
        subs[d].add(c)
    members = defaultdict(set)  # class -> instances
    for x, c in types:
        members[c].add(x)

    all_sc, all_types = set(sub_edges), set(types)
    delta_sc, delta_types = set(sub_edges), set(types)
    new_sc_total, new_type_total = [], []
    iterations = 0
    while delta_sc or delta_types:
        iterations += 1
        new_sc = set()
        for c, d in delta_sc:
            for e in supers.get(d, ()):
                new_sc.add((c, e))
            for b in subs.get(c, ()):
                new_sc.add((b, d))
        new_sc -= all_sc
        new_sc = {(c, e) for c, e in new_sc if c != e}

        new_types = set()
        for x, c in delta_types:
            for d in supers.get(c, ()):
                new_types.add((x, d))
        for c, d in delta_sc:
            for x in members.get(c, ()):
                new_types.add((x, d))
        new_types -= all_types

        for c, e in new_sc:
            supers[c].add(e)
            subs[e].add(c)
        for x, d in new_types:
            members[d].add(x)
        all_sc |= new_sc
        all_types |= new_types
        new_sc_total.extend(new_sc)
        new_type_total.extend(new_types)
        delta_sc, delta_types = new_sc, new_types

    if new_sc_total and sc_id is None:
        sc_id = store.intern(vocab.SUBCLASS_OF)
    if new_type_total and type_id is None:
        type_id = store.intern(vocab.TYPE)
    for c, e in sorted(new_sc_total):
        report.inferred_subclass_triples += store.insert(c, sc_id, e)
    for x, d in sorted(new_type_total):
        report.inferred_type_triples += store.insert(x, type_id, d)
    report.iterations = max(iterations, 1)
    log.info(
        "materialized %d type and %d subclass triples in %d rounds",
        report.inferred_type_triples,
        report.inferred_subclass_triples,
        report.iterations,
    )
    return report

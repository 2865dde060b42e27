"""Greedy cardinality-based ordering of basic graph patterns."""

from __future__ import annotations

from ..store import Snapshot
from .ast import TriplePattern, Var

# An encoded pattern position: ("c", term id) for a constant, ("v", name) for a variable.
Slot = tuple


def encode(pattern: TriplePattern, snapshot: Snapshot) -> tuple[Slot, Slot, Slot] | None:
    """Replace constants by term ids; None if a constant is absent from the store."""
    out = []
    for node in (pattern.s, pattern.p, pattern.o):
        if isinstance(node, Var):
            out.append(("v", node.name))
        else:
            tid = snapshot.lookup(node)
            if tid is None:
                return None
            out.append(("c", tid))
    return tuple(out)


def estimate(encoded, snapshot: Snapshot, bound: set[str]) -> float:
    """Expected matches of one pattern once ``bound`` variables carry values.

    Constant positions narrow the index range; each bound variable position
    divides the range count by the number of distinct values seen there.
    """
    consts = [tid if kind == "c" else None for kind, tid in encoded]
    total = snapshot.count(*consts)
    if total == 0:
        return 0.0
    est = float(total)
    for position, (kind, value) in enumerate(encoded):
        if kind == "v" and value in bound:
            est /= max(1, snapshot.distinct(position, *consts))
    return est


def plan_order(encoded: list, snapshot: Snapshot, bound=()) -> list[int]:
    """Indices of ``encoded`` in greedy evaluation order (ties broken by index)."""
    bound = set(bound)
    remaining = list(range(len(encoded)))
    order = []
    while remaining:
        best_key, best = None, None
        for i in remaining:
            names = {value for kind, value in encoded[i] if kind == "v"}
            disconnected = bool(bound) and bool(names) and not (names & bound)
            key = (disconnected, estimate(encoded[i], snapshot, bound), i)
            if best_key is None or key < best_key:
                best_key, best = key, i
        order.append(best)
        remaining.remove(best)
        bound |= {value for kind, value in encoded[best] if kind == "v"}
    return order


def plan_bgp(patterns: list[TriplePattern], snapshot: Snapshot, bound=()) -> list[TriplePattern]:
    """Order a basic graph pattern for index nested-loop evaluation.

    Patterns mentioning terms unknown to the snapshot match nothing and are
    placed first so evaluation stops immediately.
    """
    encoded = [encode(p, snapshot) for p in patterns]
    missing = [i for i, e in enumerate(encoded) if e is None]
    if missing:
        return [patterns[i] for i in missing] + [p for i, p in enumerate(patterns) if i not in missing]
    return [patterns[i] for i in plan_order(encoded, snapshot, bound)]

"""Syntax tree for the supported SPARQL subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..terms import Term


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


Node = Union[Term, Var]


@dataclass(frozen=True)
class TriplePattern:
    s: Node
    p: Node
    o: Node

    def variables(self) -> list[Var]:
        return [t for t in (self.s, self.p, self.o) if isinstance(t, Var)]


# -- filter expressions ------------------------------------------------------


@dataclass(frozen=True)
class Const:
    term: Term


@dataclass(frozen=True)
class BinOp:
    op: str  # one of = != < <= > >= && ||
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class In:
    operand: "Expr"
    items: tuple
    negated: bool = False


Expr = Union[Var, Const, BinOp, Not, In]


def expr_variables(expr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, BinOp):
        return expr_variables(expr.left) | expr_variables(expr.right)
    if isinstance(expr, Not):
        return expr_variables(expr.operand)
    if isinstance(expr, In):
        out = expr_variables(expr.operand)
        for item in expr.items:
            out |= expr_variables(item)
        return out
    return set()


# -- graph patterns ----------------------------------------------------------


@dataclass
class Filter:
    expr: Expr


@dataclass
class GroupPattern:
    elements: list = field(default_factory=list)

    def triple_patterns(self) -> list[TriplePattern]:
        return [e for e in self.elements if isinstance(e, TriplePattern)]

    def variables(self) -> list[str]:
        """Variables that can be bound by this group, in order of appearance."""
        seen: dict[str, None] = {}
        for e in self.elements:
            if isinstance(e, TriplePattern):
                for v in e.variables():
                    seen.setdefault(v.name)
            elif isinstance(e, UnionPattern):
                for branch in e.branches:
                    for v in branch.variables():
                        seen.setdefault(v)
            elif isinstance(e, GroupPattern):
                for v in e.variables():
                    seen.setdefault(v)
        return list(seen)


@dataclass
class UnionPattern:
    branches: list[GroupPattern]


@dataclass(frozen=True)
class Count:
    alias: Var
    var: Optional[Var] = None  # None means COUNT(*)
    distinct: bool = False


@dataclass
class Query:
    where: GroupPattern
    projection: Optional[list] = None  # None means SELECT *
    distinct: bool = False
    prefixes: dict[str, str] = field(default_factory=dict)
    group_by: list[Var] = field(default_factory=list)
    order_by: list[tuple[Var, bool]] = field(default_factory=list)  # (var, ascending)
    limit: Optional[int] = None
    offset: Optional[int] = None
    warnings: list[str] = field(default_factory=list)

    @property
    def aggregate(self) -> Optional[Count]:
        for item in self.projection or ():
            if isinstance(item, Count):
                return item
        return None

    def result_variables(self) -> list[str]:
        if self.projection is None:
            return self.where.variables()
        return [item.alias.name if isinstance(item, Count) else item.name for item in self.projection]

"""SPARQL subset: parsing, planning, evaluation and result serialization."""

from .ast import Count, Filter, GroupPattern, Query, TriplePattern, UnionPattern, Var
from .evaluator import DEFAULT_ROW_CAP, QueryTooLarge, SolutionSequence, evaluate
from .lexer import QuerySyntaxError
from .parser import parse_query
from .planner import plan_bgp
from .results import JSON_MEDIA_TYPE, serialize_results

__all__ = [
    "Count",
    "DEFAULT_ROW_CAP",
    "Filter",
    "GroupPattern",
    "JSON_MEDIA_TYPE",
    "Query",
    "QuerySyntaxError",
    "QueryTooLarge",
    "SolutionSequence",
    "TriplePattern",
    "UnionPattern",
    "Var",
    "evaluate",
    "parse_query",
    "plan_bgp",
    "serialize_results",
]

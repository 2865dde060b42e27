"""SPARQL results documents: the W3C JSON results format and TSV."""

from __future__ import annotations

import json

from ..ntriples import serialize_term
from ..terms import IRI, XSD_STRING, BlankNode
from .evaluator import SolutionSequence

JSON_MEDIA_TYPE = "application/sparql-results+json"
TSV_MEDIA_TYPE = "text/tab-separated-values"


def binding(term) -> dict:
    if isinstance(term, IRI):
        return {"type": "uri", "value": term.value}
    if isinstance(term, BlankNode):
        return {"type": "bnode", "value": term.label}
    out = {"type": "literal", "value": term.lexical}
    if term.language:
        out["xml:lang"] = term.language
    elif term.datatype != XSD_STRING:
        out["datatype"] = term.datatype
    return out


def to_json(seq: SolutionSequence) -> str:
    doc = {
        "head": {"vars": list(seq.variables)},
        "results": {
            "bindings": [
                {v: binding(t) for v, t in zip(seq.variables, row) if t is not None} for row in seq.rows
            ]
        },
    }
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n"


def to_tsv(seq: SolutionSequence) -> str:
    lines = ["\t".join("?" + v for v in seq.variables)]
    for row in seq.rows:
        lines.append("\t".join("" if t is None else serialize_term(t) for t in row))
    return "\n".join(lines) + "\n"


def serialize_results(seq: SolutionSequence, format: str = "json") -> str:
    if format in ("json", "sparql-results-tree"):
        return to_json(seq)
    if format == "tsv":
        return to_tsv(seq)
    raise ValueError(f"unknown results format {format!r}")

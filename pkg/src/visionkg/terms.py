"""RDF terms: IRIs, blank nodes and typed literals."""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation
from dataclasses import dataclass
from typing import Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF + "type"
RDF_LANGSTRING = RDF + "langString"
RDFS_SUBCLASSOF = RDFS + "subClassOf"
XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"

_SCHEME = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:")
_IRI_ILLEGAL = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_LANGTAG = re.compile(r"[a-zA-Z]+(-[a-zA-Z0-9]+)*\Z")
_BNODE_LABEL = re.compile(r"[^\s<>\"{}|^`\\.:][^\s<>\"{}|^`\\:]*\Z")


class TermError(ValueError):
    """A term violates the RDF data model; ``field`` names the offending part."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not _SCHEME.match(self.value):
            raise TermError("iri", f"not an absolute IRI: {self.value!r}")
        bad = _IRI_ILLEGAL.search(self.value)
        if bad:
            raise TermError("iri", f"illegal character {bad.group()!r} in {self.value!r}")

    def __str__(self):
        return self.value


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __post_init__(self):
        if not isinstance(self.label, str) or not _BNODE_LABEL.match(self.label):
            raise TermError("label", f"illegal blank node label {self.label!r}")

    def __str__(self):
        return "_:" + self.label


@dataclass(frozen=True, slots=True)
class Literal:
    """A literal; plain literals are ``xsd:string``, tagged ones ``rdf:langString``."""

    lexical: str
    datatype: str = XSD_STRING
    language: str | None = None

    def __post_init__(self):
        if not isinstance(self.lexical, str):
            raise TermError("lexical", f"lexical form must be a string, got {type(self.lexical).__name__}")
        if self.language:
            if not _LANGTAG.match(self.language):
                raise TermError("language", f"illegal language tag {self.language!r}")
            if self.datatype == XSD_STRING:
                object.__setattr__(self, "datatype", RDF_LANGSTRING)
            elif self.datatype != RDF_LANGSTRING:
                raise TermError("datatype", "a language-tagged literal must have datatype rdf:langString")
        else:
            if self.language is not None:
                object.__setattr__(self, "language", None)
            if self.datatype == RDF_LANGSTRING:
                raise TermError("language", "rdf:langString literal without a language tag")
            if not _SCHEME.match(self.datatype) or _IRI_ILLEGAL.search(self.datatype):
                raise TermError("datatype", f"not an absolute IRI: {self.datatype!r}")

    def __str__(self):
        return self.lexical


Term = Union[IRI, BlankNode, Literal]


def iri(value: str) -> IRI:
    return IRI(value)


def integer(value: int) -> Literal:
    return Literal(str(int(value)), XSD_INTEGER)


def decimal(value) -> Literal:
    """An ``xsd:decimal`` literal in canonical lexical form (``712.4``, ``3.0``)."""
    return Literal(canonical_decimal(value), XSD_DECIMAL)


def canonical_decimal(value) -> str:
    if isinstance(value, float):
        value = repr(value)
    try:
        d = Decimal(value) if not isinstance(value, Decimal) else value
    except InvalidOperation:
        raise TermError("lexical", f"not a decimal: {value!r}") from None
    if not d.is_finite():
        raise TermError("lexical", f"not a finite decimal: {value!r}")
    text = format(d.normalize(), "f")
    if "." not in text:
        text += ".0"
    return "0.0" if text == "-0.0" else text

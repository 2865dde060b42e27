"""Knowledge-graph engine for unifying computer-vision dataset annotations."""

__version__ = "0.1.0"

from .ingest import DatasetDescriptor, Flavor, IngestReport, ingest, mint_iri
from .ntriples import load_into, parse_ntriples, serialize_ntriples
from .store import Snapshot, TripleStore
from .taxonomy import AlignmentTable, TaxonomyGraph, load_alignment, load_taxonomy, materialize, subclass_closure
from .terms import IRI, BlankNode, Literal

__all__ = [
    "AlignmentTable",
    "BlankNode",
    "DatasetDescriptor",
    "Flavor",
    "IRI",
    "IngestReport",
    "Literal",
    "Snapshot",
    "TaxonomyGraph",
    "TripleStore",
    "ingest",
    "load_alignment",
    "load_into",
    "load_taxonomy",
    "materialize",
    "mint_iri",
    "parse_ntriples",
    "serialize_ntriples",
    "subclass_closure",
]

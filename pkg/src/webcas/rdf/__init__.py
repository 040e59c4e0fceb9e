"""Embedded RDF machinery: terms, Turtle I/O, quad store, isomorphism."""

from .terms import (
    BlankNode,
    Graph,
    Iri,
    IriError,
    Literal,
    Quad,
    Subject,
    Term,
    TripleType,
    format_term,
    resolve_iri,
    triple_key,
)
from .turtle import TurtleParseError, parse_turtle, serialize_turtle
from .store import QuadPattern, QuadStore, StoreLoadError, load_store, save_store
from .isomorphism import graph_isomorphic

__all__ = [
    "BlankNode",
    "Graph",
    "Iri",
    "IriError",
    "Literal",
    "Quad",
    "QuadPattern",
    "QuadStore",
    "StoreLoadError",
    "Subject",
    "Term",
    "TripleType",
    "TurtleParseError",
    "format_term",
    "graph_isomorphic",
    "load_store",
    "parse_turtle",
    "resolve_iri",
    "save_store",
    "serialize_turtle",
    "triple_key",
]

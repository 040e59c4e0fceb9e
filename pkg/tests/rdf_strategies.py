"""Hypothesis strategies shared by the RDF layer tests."""

from __future__ import annotations

import string

from hypothesis import strategies as st

from webcas.rdf import BlankNode, Graph, Iri, Literal

_NAME_ALPHABET = string.ascii_lowercase + string.digits
_HOSTS = ("alpha.example.org", "beta.example.org", "data.example.net")
_LANGS = ("en", "de", "fr", "en-US")

names = st.text(alphabet=_NAME_ALPHABET, min_size=1, max_size=8)


@st.composite
def iris(draw) -> Iri:
    host = draw(st.sampled_from(_HOSTS))
    segments = draw(st.lists(names, min_size=1, max_size=3))
    fragment = draw(st.one_of(st.none(), names))
    value = f"http://{host}/" + "/".join(segments)
    if fragment is not None:
        value += f"#{fragment}"
    return Iri(value)


def bnodes() -> st.SearchStrategy[BlankNode]:
    return st.builds(BlankNode, st.text(alphabet=_NAME_ALPHABET, min_size=1, max_size=4))


# Lexical forms exercise escaping: quotes, backslashes, newlines, unicode.
_lexicals = st.text(min_size=0, max_size=40).filter(lambda s: all(not ("\ud800" <= c <= "\udfff") for c in s))


@st.composite
def literals(draw) -> Literal:
    kind = draw(st.sampled_from(["plain", "lang", "typed", "integer"]))
    if kind == "plain":
        return Literal(draw(_lexicals))
    if kind == "lang":
        return Literal(draw(_lexicals), language=draw(st.sampled_from(_LANGS)))
    if kind == "integer":
        return Literal(str(draw(st.integers(-10**9, 10**9))), datatype=Iri("http://www.w3.org/2001/XMLSchema#integer"))
    return Literal(draw(_lexicals), datatype=draw(iris()))


def subjects() -> st.SearchStrategy:
    return st.one_of(iris(), bnodes())


def objects() -> st.SearchStrategy:
    return st.one_of(iris(), bnodes(), literals())


def triples() -> st.SearchStrategy:
    return st.tuples(subjects(), iris(), objects())


@st.composite
def graphs(draw, max_triples: int = 25) -> Graph:
    return Graph(draw(st.lists(triples(), min_size=0, max_size=max_triples)))

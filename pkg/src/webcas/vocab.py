"""Namespace constants for the vocabularies the service speaks."""

from __future__ import annotations

from .rdf.terms import Iri


class Namespace:
    """Builds IRIs under a common prefix: NS.term or NS["term"]."""

    __slots__ = ("base",)

    def __init__(self, base: str) -> None:
        self.base = base

    def __getattr__(self, local: str) -> Iri:
        if local.startswith("_"):
            raise AttributeError(local)
        return Iri(self.base + local)

    def __getitem__(self, local: str) -> Iri:
        return Iri(self.base + local)

    def __contains__(self, iri: object) -> bool:
        return isinstance(iri, Iri) and iri.value.startswith(self.base)


RDF = Namespace("http://www.w3.org/1999/02/22-rdf-syntax-ns#")
RDFS = Namespace("http://www.w3.org/2000/01/rdf-schema#")
XSD = Namespace("http://www.w3.org/2001/XMLSchema#")
FOAF = Namespace("http://xmlns.com/foaf/0.1/")
CERT = Namespace("http://www.w3.org/ns/auth/cert#")

# Student records: personal attributes, degrees, permissions.
S = Namespace("http://persemid.bfh.ch/vocab/student#")

# Service bookkeeping: documents, packages, import provenance.
CAS = Namespace("http://persemid.bfh.ch/vocab/cas#")

# Persistence index: which graph lives in which file.
STORE = Namespace("http://persemid.bfh.ch/vocab/store#")

WELL_KNOWN_PREFIXES: dict[str, str] = {
    "rdf": RDF.base,
    "rdfs": RDFS.base,
    "xsd": XSD.base,
    "foaf": FOAF.base,
    "cert": CERT.base,
    "s": S.base,
    "cas": CAS.base,
    "store": STORE.base,
}

"""RDF term model: IRIs, blank nodes, literals, triples, quads.

All term values are immutable and hashable, so they can be shared freely
between threads and used as set members or dict keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_BNODE_LABEL_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.\-]*$")
_LANG_TAG_RE = re.compile(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$")

XSD_STRING_IRI = "http://www.w3.org/2001/XMLSchema#string"
RDF_LANG_STRING_IRI = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString"


class IriError(ValueError):
    """Raised for malformed IRIs and impossible reference resolutions."""


@dataclass(frozen=True, slots=True)
class Iri:
    """An absolute IRI.

    Relative references exist only as plain strings during parsing; once an
    Iri is constructed it always carries a scheme. Equality is exact
    codepoint equality, with no normalization.
    """

    value: str

    def __post_init__(self) -> None:
        if not _SCHEME_RE.match(self.value):
            raise IriError(f"not an absolute IRI: {self.value!r}")
        if any(c in self.value for c in "<>\" \n\r\t{}|\\^`"):
            raise IriError(f"forbidden character in IRI: {self.value!r}")

    def __str__(self) -> str:
        return self.value

    @property
    def scheme(self) -> str:
        return self.value.split(":", 1)[0].lower()

    def without_fragment(self) -> "Iri":
        return Iri(self.value.split("#", 1)[0])

    @property
    def fragment(self) -> Optional[str]:
        if "#" in self.value:
            return self.value.split("#", 1)[1]
        return None


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __post_init__(self) -> None:
        if not _BNODE_LABEL_RE.match(self.label) or self.label.endswith("."):
            raise ValueError(f"blank node label not serializable: {self.label!r}")

    def __str__(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True, slots=True)
class Literal:
    """An RDF literal.

    A missing datatype means xsd:string. A language tag forces the standard
    language-string datatype; passing any other datatype together with a
    language is rejected.
    """

    lexical: str
    datatype: Iri = Iri(XSD_STRING_IRI)
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.language is not None:
            if not _LANG_TAG_RE.match(self.language):
                raise ValueError(f"malformed language tag: {self.language!r}")
            if self.datatype.value not in (XSD_STRING_IRI, RDF_LANG_STRING_IRI):
                raise ValueError("language-tagged literal cannot carry a datatype")
            object.__setattr__(self, "datatype", Iri(RDF_LANG_STRING_IRI))


Term = Union[Iri, BlankNode, Literal]
Subject = Union[Iri, BlankNode]
TripleType = tuple[Subject, Iri, Term]


def _check_triple(triple: TripleType) -> TripleType:
    s, p, o = triple
    if not isinstance(s, (Iri, BlankNode)):
        raise TypeError(f"triple subject must be an IRI or blank node: {s!r}")
    if not isinstance(p, Iri):
        raise TypeError(f"triple predicate must be an IRI: {p!r}")
    if not isinstance(o, (Iri, BlankNode, Literal)):
        raise TypeError(f"triple object must be an RDF term: {o!r}")
    return triple


@dataclass(frozen=True, slots=True)
class Quad:
    """A triple placed in a named graph."""

    graph: Iri
    subject: Subject
    predicate: Iri
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.graph, Iri):
            raise TypeError(f"graph name must be an IRI: {self.graph!r}")
        _check_triple((self.subject, self.predicate, self.object))

    @property
    def triple(self) -> "TripleType":
        return (self.subject, self.predicate, self.object)


def escape_string(text: str) -> str:
    """Escape a literal's lexical form for Turtle/N-Triples output."""
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def format_term(term: Term) -> str:
    """Canonical N-Triples-style text form, used for sorting and messages."""
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    if isinstance(term, Literal):
        body = f'"{escape_string(term.lexical)}"'
        if term.language is not None:
            return f"{body}@{term.language}"
        if term.datatype.value == XSD_STRING_IRI:
            return body
        return f"{body}^^<{term.datatype.value}>"
    raise TypeError(f"not an RDF term: {term!r}")


def triple_key(triple: "TripleType") -> "tuple[str, str, str]":
    s, p, o = triple
    return (format_term(s), format_term(p), format_term(o))


class Graph:
    """A set of triples. Insertion of a duplicate is a no-op."""

    __slots__ = ("_triples",)

    def __init__(self, triples: Iterable["TripleType"] = ()) -> None:
        self._triples: set = set()
        for t in triples:
            self.add(t)

    def add(self, triple: "TripleType") -> bool:
        """Insert one triple. Returns True when it was not already present."""
        t = _check_triple(tuple(triple))
        if t in self._triples:
            return False
        self._triples.add(t)
        return True

    def discard(self, triple: "TripleType") -> bool:
        t = tuple(triple)
        if t in self._triples:
            self._triples.discard(t)
            return True
        return False

    def __contains__(self, triple: object) -> bool:
        return tuple(triple) in self._triples  # type: ignore[arg-type]

    def __iter__(self) -> Iterator["TripleType"]:
        return iter(self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __bool__(self) -> bool:
        return bool(self._triples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self) -> str:
        return f"Graph({len(self._triples)} triples)"

    def copy(self) -> "Graph":
        g = Graph()
        g._triples = set(self._triples)
        return g

    def sorted(self) -> "list[TripleType]":
        return sorted(self._triples, key=triple_key)

    def triples(
        self,
        subject: Optional[Subject] = None,
        predicate: Optional[Iri] = None,
        obj: Optional[Term] = None,
    ) -> Iterator["TripleType"]:
        """Iterate triples matching the concrete positions given."""
        for s, p, o in self._triples:
            if subject is not None and s != subject:
                continue
            if predicate is not None and p != predicate:
                continue
            if obj is not None and o != obj:
                continue
            yield (s, p, o)

    def value(self, subject: Subject, predicate: Iri) -> Optional[Term]:
        """The least object (by canonical order) for (subject, predicate)."""
        objs = [o for _, _, o in self.triples(subject, predicate)]
        if not objs:
            return None
        return min(objs, key=format_term)

    def subjects(self) -> "set[Subject]":
        return {s for s, _, _ in self._triples}


# --- Generic URI reference resolution -------------------------------------
#
# The stdlib urljoin cannot represent a present-but-empty fragment
# ("<#>" must resolve to "<base>#"), so resolution follows the generic
# algorithm directly: split, merge paths, remove dot segments, recompose.

_URI_SPLIT_RE = re.compile(
    r"^(?:([A-Za-z][A-Za-z0-9+.\-]*):)?"  # scheme
    r"(?://([^/?#]*))?"  # authority
    r"([^?#]*)"  # path
    r"(?:\?([^#]*))?"  # query
    r"(?:#(.*))?$",  # fragment
    re.DOTALL,
)


def _split_uri(uri: str) -> "tuple[Optional[str], Optional[str], str, Optional[str], Optional[str]]":
    m = _URI_SPLIT_RE.match(uri)
    assert m is not None  # the pattern matches any string
    return (m.group(1), m.group(2), m.group(3), m.group(4), m.group(5))


def _remove_dot_segments(path: str) -> str:
    output: "list[str]" = []
    while path:
        if path.startswith("../"):
            path = path[3:]
        elif path.startswith("./"):
            path = path[2:]
        elif path.startswith("/./"):
            path = "/" + path[3:]
        elif path == "/.":
            path = "/"
        elif path.startswith("/../"):
            path = "/" + path[4:]
            if output:
                output.pop()
        elif path == "/..":
            path = "/"
            if output:
                output.pop()
        elif path in (".", ".."):
            path = ""
        else:
            if path.startswith("/"):
                idx = path.find("/", 1)
            else:
                idx = path.find("/")
            if idx == -1:
                output.append(path)
                path = ""
            else:
                output.append(path[:idx])
                path = path[idx:]
    return "".join(output)


def _merge_paths(base_authority: Optional[str], base_path: str, ref_path: str) -> str:
    if base_authority is not None and base_path == "":
        return "/" + ref_path
    idx = base_path.rfind("/")
    if idx == -1:
        return ref_path
    return base_path[: idx + 1] + ref_path


def _recompose(
    scheme: Optional[str],
    authority: Optional[str],
    path: str,
    query: Optional[str],
    fragment: Optional[str],
) -> str:
    out = []
    if scheme is not None:
        out.append(scheme + ":")
    if authority is not None:
        out.append("//" + authority)
    out.append(path)
    if query is not None:
        out.append("?" + query)
    if fragment is not None:
        out.append("#" + fragment)
    return "".join(out)


def resolve_iri(base: Optional[Iri], reference: str) -> Iri:
    """Resolve a reference against an absolute base IRI.

    Follows the generic reference-resolution rules: path merging, removal
    of "." and ".." segments, and fragment handling. A present-but-empty
    fragment is preserved, so resolve(<http://a/b>, "#") is <http://a/b#>.
    """
    r_scheme, r_auth, r_path, r_query, r_frag = _split_uri(reference)
    if r_scheme is not None:
        result = _recompose(r_scheme, r_auth, _remove_dot_segments(r_path), r_query, r_frag)
    else:
        if base is None:
            raise IriError(f"relative IRI {reference!r} with no base")
        b_scheme, b_auth, b_path, b_query, _ = _split_uri(base.value)
        if b_scheme is None:
            raise IriError(f"base IRI is not absolute: {base.value!r}")
        if r_auth is not None:
            t_auth, t_path, t_query = r_auth, _remove_dot_segments(r_path), r_query
        elif r_path == "":
            t_auth, t_path = b_auth, b_path
            t_query = r_query if r_query is not None else b_query
        elif r_path.startswith("/"):
            t_auth, t_path, t_query = b_auth, _remove_dot_segments(r_path), r_query
        else:
            merged = _merge_paths(b_auth, b_path, r_path)
            t_auth, t_path, t_query = b_auth, _remove_dot_segments(merged), r_query
        result = _recompose(b_scheme, t_auth, t_path, t_query, r_frag)
    try:
        return Iri(result)
    except IriError as exc:
        raise IriError(f"reference {reference!r} does not resolve to an absolute IRI: {exc}") from exc

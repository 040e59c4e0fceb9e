"""Turtle reader and writer behavior, including the supported-subset fence."""

from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given, settings

from rdf_strategies import graphs
from webcas.rdf import (
    BlankNode,
    Graph,
    Iri,
    Literal,
    TurtleParseError,
    graph_isomorphic,
    parse_turtle,
    serialize_turtle,
)
from webcas.vocab import RDF, S, WELL_KNOWN_PREFIXES, XSD

STUDENT_RECORD = (Path(__file__).parent / "data" / "student_record.ttl").read_text(encoding="utf-8")


class TestStudentRecordFixture:
    def test_exact_triples(self) -> None:
        g = parse_turtle(STUDENT_RECORD)
        subject = Iri("http://example.org/Student#")
        assert len(g) == 7
        assert (subject, RDF.type, S.Student) in g
        assert (subject, S.webid, Iri("http://example.org/StudentWebID")) in g
        assert (subject, S.name, Literal("Dent")) in g
        assert (subject, S.vorname, Literal("Stu")) in g
        assert (subject, S.email, Literal("stu.dent@example.org")) in g
        assert (subject, S.matrikelnummer, Literal("1-234-56")) in g
        assert (subject, S.permission, Iri("http://hmsc.example.org/webid#id")) in g

    def test_round_trip_is_isomorphic(self) -> None:
        g = parse_turtle(STUDENT_RECORD)
        again = parse_turtle(serialize_turtle(g, WELL_KNOWN_PREFIXES))
        assert again == g
        assert graph_isomorphic(again, g)


class TestParserFeatures:
    def test_base_directive_resolves_relative_iris(self) -> None:
        g = parse_turtle('@base <http://x.org/dir/doc> . <child> <#p> <../up> .')
        assert (Iri("http://x.org/dir/child"), Iri("http://x.org/dir/doc#p"), Iri("http://x.org/up")) in g

    def test_external_base_argument(self) -> None:
        g = parse_turtle("<#me> a <#Person> .", base="http://y.org/profile")
        assert (Iri("http://y.org/profile#me"), RDF.type, Iri("http://y.org/profile#Person")) in g

    def test_object_and_predicate_lists(self) -> None:
        g = parse_turtle(
            "@prefix v: <http://v.org/> . v:s v:p v:a, v:b ; v:q v:c ; ; v:r 5 ."
        )
        assert len(g) == 4
        assert (Iri("http://v.org/s"), Iri("http://v.org/r"), Literal("5", XSD.integer)) in g

    def test_labeled_blank_nodes(self) -> None:
        g = parse_turtle("@prefix v: <http://v.org/> . _:a v:knows _:b . _:b v:knows _:a .")
        assert (BlankNode("a"), Iri("http://v.org/knows"), BlankNode("b")) in g
        assert len(g) == 2

    def test_language_and_typed_literals(self) -> None:
        g = parse_turtle(
            '@prefix v: <http://v.org/> .\n'
            '@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n'
            'v:s v:p "hello"@en ; v:q "42"^^xsd:integer ; v:r "raw"^^<http://v.org/dt> .'
        )
        assert (Iri("http://v.org/s"), Iri("http://v.org/p"), Literal("hello", language="en")) in g
        assert (Iri("http://v.org/s"), Iri("http://v.org/q"), Literal("42", XSD.integer)) in g
        assert (Iri("http://v.org/s"), Iri("http://v.org/r"), Literal("raw", Iri("http://v.org/dt"))) in g

    def test_string_escapes(self) -> None:
        g = parse_turtle('@prefix v: <http://v.org/> . v:s v:p "a\\"b\\\\c\\nd\\u0041" .')
        (triple,) = list(g)
        assert triple[2] == Literal('a"b\\c\nd' + "A")

    def test_negative_and_signed_integers(self) -> None:
        g = parse_turtle("@prefix v: <http://v.org/> . v:s v:p -7 ; v:q +3 .")
        assert (Iri("http://v.org/s"), Iri("http://v.org/p"), Literal("-7", XSD.integer)) in g
        assert (Iri("http://v.org/s"), Iri("http://v.org/q"), Literal("+3", XSD.integer)) in g

    def test_comments_ignored(self) -> None:
        g = parse_turtle("# leading\n@prefix v: <http://v.org/> . # trailing\nv:s v:p v:o . # end")
        assert len(g) == 1

    def test_duplicate_triples_collapse(self) -> None:
        g = parse_turtle("@prefix v: <http://v.org/> . v:s v:p v:o . v:s v:p v:o .")
        assert len(g) == 1


class TestSubsetRejections:
    @pytest.mark.parametrize(
        "text,needle,line,col",
        [
            ("@prefix v: <http://v.org/> .\nv:s v:p (1 2) .", "collections", 2, 9),
            ("@prefix v: <http://v.org/> .\nv:s v:p [] .", "anonymous blank nodes", 2, 9),
            ("@prefix v: <http://v.org/> .\nv:s v:p 'x' .", "single-quoted", 2, 9),
            ('@prefix v: <http://v.org/> .\nv:s v:p """x""" .', "multiline", 2, 9),
            ("@prefix v: <http://v.org/> .\nv:s v:p 1.5 .", "decimal", 2, 9),
            ("@prefix v: <http://v.org/> .\nv:s v:p 1e3 .", "exponent", 2, 9),
            ("@prefix v: <http://v.org/> .\nv:s v:p true .", "boolean", 2, 9),
        ],
    )
    def test_rejected_with_position(self, text: str, needle: str, line: int, col: int) -> None:
        with pytest.raises(TurtleParseError) as exc_info:
            parse_turtle(text)
        err = exc_info.value
        assert needle in str(err)
        assert (err.line, err.col) == (line, col)

    def test_newline_in_string_rejected(self) -> None:
        with pytest.raises(TurtleParseError, match="multiline"):
            parse_turtle('@prefix v: <http://v.org/> . v:s v:p "a\nb" .')

    def test_undeclared_prefix(self) -> None:
        with pytest.raises(TurtleParseError, match="undeclared prefix 'nope:'"):
            parse_turtle("nope:s nope:p nope:o .")

    def test_unterminated_string(self) -> None:
        with pytest.raises(TurtleParseError, match="unterminated"):
            parse_turtle('@prefix v: <http://v.org/> . v:s v:p "never ends .')

    def test_missing_dot(self) -> None:
        with pytest.raises(TurtleParseError, match="expected '.'"):
            parse_turtle("@prefix v: <http://v.org/> . v:s v:p v:o")

    @pytest.mark.parametrize(
        "text",
        [
            "@prefix v: <http://v.org/> . v:s v:p _:tail",
            "@prefix v: <http://v.org/> . v:s v:p 5",
            "@prefix v: <http://v.org/> . v:s v:p \"x\"@en",
            "@prefix v: <http://v.org/> . v:s",
            "<http://v.org/s> <http://v.org/p> <http://v.org/o",
        ],
    )
    def test_truncated_documents_error_instead_of_looping(self, text: str) -> None:
        with pytest.raises(TurtleParseError):
            parse_turtle(text)

    def test_relative_iri_without_base(self) -> None:
        with pytest.raises(TurtleParseError, match="no base"):
            parse_turtle("<child> <http://v.org/p> <http://v.org/o> .")

    def test_literal_as_subject_rejected(self) -> None:
        with pytest.raises(TurtleParseError, match="expected subject"):
            parse_turtle('"text" <http://v.org/p> <http://v.org/o> .')


class TestSerializer:
    def test_deterministic_across_insertion_orders(self) -> None:
        triples = list(parse_turtle(STUDENT_RECORD))
        rng = random.Random(7)
        outputs = set()
        for _ in range(10):
            rng.shuffle(triples)
            outputs.add(serialize_turtle(Graph(triples), WELL_KNOWN_PREFIXES))
        assert len(outputs) == 1

    def test_unused_prefixes_not_declared(self) -> None:
        g = parse_turtle("@prefix v: <http://v.org/> . v:s v:p v:o .")
        out = serialize_turtle(g, WELL_KNOWN_PREFIXES | {"v": "http://v.org/"})
        assert "@prefix v:" in out
        assert "@prefix foaf:" not in out

    def test_empty_graph_serializes_empty(self) -> None:
        assert serialize_turtle(Graph(), WELL_KNOWN_PREFIXES) == ""
        assert len(parse_turtle("")) == 0

    def test_awkward_local_names_fall_back_to_angle_iris(self) -> None:
        g = Graph([(Iri("http://v.org/a b".replace(" ", "%20")), Iri("http://v.org/p"), Literal("x"))])
        out = serialize_turtle(g, {"v": "http://v.org/"})
        assert "<http://v.org/a%20b>" in out

    @settings(max_examples=120, deadline=None)
    @given(graphs())
    def test_round_trip_preserves_graph(self, g: Graph) -> None:
        text = serialize_turtle(g, WELL_KNOWN_PREFIXES)
        again = parse_turtle(text)
        assert again == g
        assert graph_isomorphic(again, g)

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_serialization_is_canonical(self, g: Graph) -> None:
        copy = Graph(list(g))
        assert serialize_turtle(g, WELL_KNOWN_PREFIXES) == serialize_turtle(copy, WELL_KNOWN_PREFIXES)

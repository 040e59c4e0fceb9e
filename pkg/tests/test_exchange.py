"""Package export, validation, and re-homing import."""

import hashlib
import io
import random
import zipfile
from pathlib import Path

import pytest

from webcas.exchange import (
    MANIFEST_NAME,
    ImportReport,
    PackageInvalidError,
    build_manifest,
    export_package,
    import_package,
    validate_package,
)
from webcas.rdf import Graph, Iri, Literal, Quad, QuadPattern, parse_turtle, serialize_turtle
from webcas.service import ContentAccessService, ServiceConfig, UnknownResourceError
from webcas.vocab import CAS, RDF, S, WELL_KNOWN_PREFIXES, XSD

GRANTEE = Iri("http://elsewhere.example.org/profile/peer#id")


def make_service(tmp_path: Path, name: str) -> ContentAccessService:
    return ContentAccessService(
        ServiceConfig(base_iri=Iri(f"http://{name}.example.org"), data_dir=tmp_path / name)
    )


def make_dossier(service: ContentAccessService, slug: str, documents, kind=CAS.BachelorDossier) -> Iri:
    """A minimal package node over freshly stored documents."""
    actor = service.actor_id(slug)
    import uuid

    dossier = service.dossier_iri(str(uuid.uuid4()))
    quads = [
        Quad(actor.graph_iri, dossier, RDF.type, CAS.Package),
        Quad(actor.graph_iri, dossier, CAS.packageKind, kind),
        Quad(actor.graph_iri, Iri(dossier.value + "#degree"), RDF.type, CAS.Degree),
        Quad(actor.graph_iri, Iri(dossier.value + "#degree"), CAS.degreeTitle, Literal("BSc")),
        Quad(actor.graph_iri, dossier, CAS.degree, Iri(dossier.value + "#degree")),
    ]
    for filename, media_type, data in documents:
        record = service.store_document(actor, data, filename, media_type)
        quads.append(Quad(actor.graph_iri, dossier, CAS.includesDocument, record.iri))
    service.commit(quads)
    return dossier


@pytest.fixture()
def issuer(tmp_path) -> ContentAccessService:
    service = make_service(tmp_path, "issuer")
    service.create_actor("uni", {S.name: Literal("Issuing University")})
    return service


@pytest.fixture()
def receiver(tmp_path) -> ContentAccessService:
    service = make_service(tmp_path, "receiver")
    service.create_actor("student", {S.name: Literal("Dent")})
    return service


DOCS = [
    ("transcript.pdf", "application/pdf", b"%PDF-1.4 fake transcript"),
    ("thesis.txt", "text/plain", b"thesis body\n" * 40),
]


def entry_names(data: bytes) -> "list[str]":
    return zipfile.ZipFile(io.BytesIO(data)).namelist()


def test_export_counts_entries(issuer):
    dossier = make_dossier(issuer, "uni", DOCS)
    data = export_package(issuer.store, dossier, issuer.config.files_dir)
    names = entry_names(data)
    assert len(names) == 3
    assert names[0] == MANIFEST_NAME
    assert all(name.startswith("documents/") for name in names[1:])


def test_export_without_documents(issuer):
    dossier = make_dossier(issuer, "uni", [])
    data = export_package(issuer.store, dossier, issuer.config.files_dir)
    assert entry_names(data) == [MANIFEST_NAME]
    manifest = parse_turtle(zipfile.ZipFile(io.BytesIO(data)).read(MANIFEST_NAME).decode())
    assert not list(manifest.triples(None, CAS.archivePath))


def test_manifest_reparses_with_kind(issuer):
    dossier = make_dossier(issuer, "uni", DOCS[:1])
    data = export_package(issuer.store, dossier, issuer.config.files_dir)
    manifest = parse_turtle(zipfile.ZipFile(io.BytesIO(data)).read(MANIFEST_NAME).decode())
    assert manifest.value(dossier, CAS.packageKind) == CAS.BachelorDossier
    assert (dossier, RDF.type, CAS.Package) in manifest


def test_export_is_deterministic(issuer):
    dossier = make_dossier(issuer, "uni", DOCS)
    first = export_package(issuer.store, dossier, issuer.config.files_dir)
    second = export_package(issuer.store, dossier, issuer.config.files_dir)
    assert first == second


def test_export_strips_permissions(issuer):
    dossier = make_dossier(issuer, "uni", DOCS)
    actor = issuer.actor_id("uni")
    issuer.grant(actor, dossier, GRANTEE)
    record = issuer.list_documents(actor)[0]
    issuer.grant(actor, record.iri, GRANTEE)

    manifest, _ = build_manifest(issuer.store, dossier)
    assert not list(manifest.triples(None, S.permission))
    data = export_package(issuer.store, dossier, issuer.config.files_dir)
    assert b"permission" not in zipfile.ZipFile(io.BytesIO(data)).read(MANIFEST_NAME)


def test_export_unknown_dossier(issuer):
    with pytest.raises(UnknownResourceError, match="no dossier"):
        export_package(issuer.store, Iri("http://issuer.example.org/dossiers/none"), issuer.config.files_dir)


def test_export_with_missing_file(issuer):
    dossier = make_dossier(issuer, "uni", DOCS[:1])
    record = issuer.list_documents(issuer.actor_id("uni"))[0]
    (issuer.config.files_dir / record.id).unlink()
    with pytest.raises(UnknownResourceError, match="missing"):
        export_package(issuer.store, dossier, issuer.config.files_dir)


# --- validate_package ---------------------------------------------------------


def zip_bytes(entries: "dict[str, bytes]") -> bytes:
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        for name, data in entries.items():
            archive.writestr(name, data)
    return buffer.getvalue()


def manifest_text(dossier: str, docs: "dict[str, bytes]", kind: str = "BachelorDossier") -> str:
    graph = Graph()
    node = Iri(dossier)
    graph.add((node, RDF.type, CAS.Package))
    graph.add((node, CAS.packageKind, Iri(f"http://persemid.bfh.ch/vocab/cas#{kind}")))
    for path, body in docs.items():
        doc = Iri(f"{dossier}-doc-{path.rsplit('/', 1)[-1]}")
        graph.add((node, CAS.includesDocument, doc))
        graph.add((doc, RDF.type, CAS.Document))
        graph.add((doc, CAS.filename, Literal(path.rsplit("/", 1)[-1])))
        graph.add((doc, CAS.mediaType, Literal("application/octet-stream")))
        graph.add((doc, CAS.sha256, Literal(hashlib.sha256(body).hexdigest())))
        graph.add((doc, CAS.size, Literal(str(len(body)), XSD.integer)))
        graph.add((doc, CAS.archivePath, Literal(path)))
    return serialize_turtle(graph, WELL_KNOWN_PREFIXES)


def test_validate_accepts_exported_package(issuer):
    dossier = make_dossier(issuer, "uni", DOCS)
    assert validate_package(export_package(issuer.store, dossier, issuer.config.files_dir)) == []


def test_validate_rejects_garbage():
    issues = validate_package(b"this is not a zip")
    assert len(issues) == 1 and "not a ZIP archive" in issues[0]


def test_validate_rejects_traversal_entries():
    docs = {"documents/ok": b"fine"}
    data = zip_bytes(
        {
            MANIFEST_NAME: manifest_text("http://x.example.org/dossiers/1", docs).encode(),
            "documents/ok": b"fine",
            "documents/../evil": b"boom",
        }
    )
    issues = validate_package(data)
    assert any("outside documents/" in issue and "evil" in issue for issue in issues)


def test_validate_rejects_traversal_archive_path():
    body = b"payload"
    text = manifest_text("http://x.example.org/dossiers/1", {"../escape": body})
    data = zip_bytes({MANIFEST_NAME: text.encode(), "../escape": body})
    issues = validate_package(data)
    assert any("escapes documents/" in issue for issue in issues)
    assert any("outside documents/" in issue for issue in issues)


def test_validate_names_digest_mismatch_path(issuer):
    dossier = make_dossier(issuer, "uni", DOCS)
    data = bytearray(export_package(issuer.store, dossier, issuer.config.files_dir))
    archive = zipfile.ZipFile(io.BytesIO(bytes(data)))
    victim = archive.namelist()[1]
    entries = {name: archive.read(name) for name in archive.namelist()}
    flipped = bytearray(entries[victim])
    flipped[0] ^= 0xFF
    entries[victim] = bytes(flipped)
    issues = validate_package(zip_bytes(entries))
    assert issues == [f"sha256 mismatch for '{victim}'"]


def test_validate_requires_exactly_one_package_node():
    no_node = zip_bytes({MANIFEST_NAME: b""})
    assert any("no package node" in issue for issue in validate_package(no_node))

    text = (
        "@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .\n"
        "@prefix cas: <http://persemid.bfh.ch/vocab/cas#> .\n"
        "<http://x.org/d1> rdf:type cas:Package ; cas:packageKind cas:Decision .\n"
        "<http://x.org/d2> rdf:type cas:Package ; cas:packageKind cas:Decision .\n"
    )
    two = zip_bytes({MANIFEST_NAME: text.encode()})
    assert any("more than one package node" in issue for issue in validate_package(two))


def test_validate_rejects_unknown_kind():
    text = (
        "@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .\n"
        "@prefix cas: <http://persemid.bfh.ch/vocab/cas#> .\n"
        "<http://x.org/d1> rdf:type cas:Package ; cas:packageKind cas:Surprise .\n"
    )
    issues = validate_package(zip_bytes({MANIFEST_NAME: text.encode()}))
    assert any("unknown kind" in issue for issue in issues)

    without = "<http://x.org/d1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://persemid.bfh.ch/vocab/cas#Package> .\n"
    issues = validate_package(zip_bytes({MANIFEST_NAME: without.encode()}))
    assert any("no package kind" in issue for issue in issues)


def test_validate_finds_orphan_and_missing_entries():
    body = b"present"
    text = manifest_text("http://x.example.org/dossiers/1", {"documents/listed": body})
    data = zip_bytes(
        {
            MANIFEST_NAME: text.encode(),
            "documents/unlisted": b"who am i",
        }
    )
    issues = validate_package(data)
    assert any("missing archive entry 'documents/listed'" in issue for issue in issues)
    assert any("orphan archive entry 'documents/unlisted'" in issue for issue in issues)


def test_validate_rejects_unparseable_manifest():
    issues = validate_package(zip_bytes({MANIFEST_NAME: b"<http://x.org/a <broken"}))
    assert len(issues) == 1 and "does not parse" in issues[0]


# --- import_package -----------------------------------------------------------


def harvest_mapping(service, actor) -> "dict[Iri, Iri]":
    graph = service.store.graph(actor.graph_iri)
    return {
        obj: subject
        for subject, _, obj in graph.triples(None, CAS.importedFrom)
        if isinstance(subject, Iri) and isinstance(obj, Iri)
    }


def test_import_rehomes_and_preserves(issuer, receiver):
    dossier = make_dossier(issuer, "uni", DOCS)
    issuer.grant(issuer.actor_id("uni"), dossier, GRANTEE)  # must not travel
    data = export_package(issuer.store, dossier, issuer.config.files_dir)

    student = receiver.actor_id("student")
    report = import_package(receiver, student, data)
    assert report.documents_added == 2
    assert report.package_kind == CAS.BachelorDossier
    assert report.warnings == []
    assert report.triples_added > 0

    mapping = harvest_mapping(receiver, student)
    local_dossier = mapping[dossier]
    assert local_dossier.value.startswith("http://receiver.example.org/dossiers/")

    # The imported slice equals the manifest, re-homed, plus provenance.
    manifest = parse_turtle(zipfile.ZipFile(io.BytesIO(data)).read(MANIFEST_NAME).decode())

    def rehome(term):
        if isinstance(term, Iri):
            if term in mapping:
                return mapping[term]
            if term.value.startswith(dossier.value + "#"):
                return Iri(local_dossier.value + term.value[len(dossier.value) :])
        return term

    expected = {
        (rehome(s), p, rehome(o)) for s, p, o in manifest if p != CAS.archivePath
    } | {(new, CAS.importedFrom, old) for old, new in mapping.items()}
    graph = receiver.store.graph(student.graph_iri)
    imported_subjects = {rehome(s) for s, _, _ in manifest} | set(mapping.values())
    actual = {t for t in graph if t[0] in imported_subjects}
    assert actual == expected

    # Document bytes byte-identical by digest and by content.
    for record in receiver.list_documents(student):
        assert hashlib.sha256(receiver.document_bytes(record)).hexdigest() == record.sha256
    by_name = {r.filename: r for r in receiver.list_documents(student)}
    assert receiver.document_bytes(by_name["transcript.pdf"]) == DOCS[0][2]
    assert receiver.document_bytes(by_name["thesis.txt"]) == DOCS[1][2]

    # No permission triple came along.
    assert not list(graph.triples(None, S.permission))


def test_import_twice_is_idempotent(issuer, receiver):
    dossier = make_dossier(issuer, "uni", DOCS)
    data = export_package(issuer.store, dossier, issuer.config.files_dir)
    student = receiver.actor_id("student")
    import_package(receiver, student, data)
    before = receiver.store.match(QuadPattern())

    report = import_package(receiver, student, data)
    assert report == ImportReport(0, 0, CAS.BachelorDossier, report.warnings)
    assert len(report.warnings) == 1 and "already imported" in report.warnings[0]
    assert receiver.store.match(QuadPattern()) == before


def test_import_reuses_shared_documents(issuer, receiver):
    shared = ("shared.bin", "application/octet-stream", b"the very same bytes")
    first = make_dossier(issuer, "uni", [shared])
    record = issuer.list_documents(issuer.actor_id("uni"))[0]
    second = make_dossier(issuer, "uni", [])
    issuer.commit([Quad(issuer.actor_id("uni").graph_iri, second, CAS.includesDocument, record.iri)])

    student = receiver.actor_id("student")
    import_package(receiver, student, export_package(issuer.store, first, issuer.config.files_dir))
    report = import_package(receiver, student, export_package(issuer.store, second, issuer.config.files_dir))
    assert report.documents_added == 0
    assert any("already imported" in warning for warning in report.warnings)

    mapping = harvest_mapping(receiver, student)
    graph = receiver.store.graph(student.graph_iri)
    links = {o for _, _, o in graph.triples(mapping[second], CAS.includesDocument)}
    assert links == {mapping[record.iri]}
    assert len(receiver.list_documents(student)) == 1


def test_import_rejects_invalid_package(receiver):
    student = receiver.actor_id("student")
    before = receiver.store.match(QuadPattern())
    with pytest.raises(PackageInvalidError) as info:
        import_package(receiver, student, b"junk")
    assert info.value.issues
    assert receiver.store.match(QuadPattern()) == before


def test_import_is_all_or_nothing(issuer, receiver, monkeypatch):
    dossier = make_dossier(issuer, "uni", DOCS)
    data = export_package(issuer.store, dossier, issuer.config.files_dir)
    student = receiver.actor_id("student")
    before_quads = receiver.store.match(QuadPattern())
    before_files = sorted(p.name for p in receiver.config.files_dir.glob("*")) if receiver.config.files_dir.exists() else []

    def broken_persist():
        raise OSError("disk full")

    monkeypatch.setattr(receiver, "persist", broken_persist)
    with pytest.raises(OSError):
        import_package(receiver, student, data)
    monkeypatch.undo()

    assert receiver.store.match(QuadPattern()) == before_quads
    after_files = sorted(p.name for p in receiver.config.files_dir.glob("*"))
    assert after_files == before_files


def test_round_trip_randomized(tmp_path):
    """Randomized small dossiers survive export -> validate -> import."""
    rng = random.Random(4711)
    issuer = make_service(tmp_path, "rt-issuer")
    issuer.create_actor("uni", {})
    for round_number in range(8):
        receiver = make_service(tmp_path / f"r{round_number}", "rt-receiver")
        receiver.create_actor("student", {})
        documents = [
            (
                f"doc{i}.bin",
                "application/octet-stream",
                bytes(rng.randrange(256) for _ in range(rng.randrange(1, 200))),
            )
            for i in range(rng.randrange(0, 4))
        ]
        dossier = make_dossier(issuer, "uni", documents)
        data = export_package(issuer.store, dossier, issuer.config.files_dir)
        assert validate_package(data) == []
        student = receiver.actor_id("student")
        report = import_package(receiver, student, data)
        assert report.documents_added == len(documents)
        for record in receiver.list_documents(student):
            assert hashlib.sha256(receiver.document_bytes(record)).hexdigest() == record.sha256

"""Cross-domain data exchange as explicit ZIP packages.

A package is a self-describing unit: a deterministic Turtle manifest at
the root plus the raw document bytes under documents/<uuid>. The
receiving side validates before importing, re-homes every imported node
under its own IRI space, and keeps the source identifier as provenance.
Stores never talk to each other directly; packages travel through the
actors.
"""

from __future__ import annotations

import hashlib
import io
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from .rdf import (
    BlankNode,
    Graph,
    Iri,
    Literal,
    Quad,
    QuadPattern,
    QuadStore,
    Subject,
    Term,
    TurtleParseError,
    parse_turtle,
    serialize_turtle,
)
from .service import ActorId, ServiceError, UnknownResourceError
from .vocab import CAS, RDF, S, WELL_KNOWN_PREFIXES, XSD

if TYPE_CHECKING:
    from .service import ContentAccessService

MANIFEST_NAME = "manifest.ttl"
PACKAGE_KINDS = (CAS.BachelorDossier, CAS.ApplicationDossier, CAS.Decision)

# Fixed timestamp so identical content yields identical archive bytes.
_EPOCH = (1980, 1, 1, 0, 0, 0)


class PackageInvalidError(ServiceError):
    """Raised when a package fails validation; carries every issue found."""

    def __init__(self, issues: "list[str]") -> None:
        super().__init__("; ".join(issues))
        self.issues = issues


@dataclass(frozen=True, slots=True)
class ImportReport:
    triples_added: int
    documents_added: int
    package_kind: Iri
    warnings: "list[str]" = field(default_factory=list)


def _dossier_graph(store: QuadStore, dossier: Iri) -> Graph:
    for quad in store.match(QuadPattern(subject=dossier, predicate=RDF.type, object=CAS.Package)):
        return store.graph(quad.graph)
    raise UnknownResourceError(f"no dossier {dossier}")


def _archive_path(document: Iri) -> str:
    return f"documents/{document.value.rsplit('/', 1)[-1]}"


def build_manifest(store: QuadStore, dossier: Iri) -> "tuple[Graph, list[tuple[str, Iri]]]":
    """The exported view of a dossier: its triples, its fragment children,
    its documents' metadata, and the archive-path links. Permission
    triples stay home; they are local policy, not dossier content.
    """
    source = _dossier_graph(store, dossier)
    subjects: "set[Subject]" = {dossier}
    fragment_prefix = dossier.value + "#"
    for subject in source.subjects():
        if isinstance(subject, Iri) and subject.value.startswith(fragment_prefix):
            subjects.add(subject)
    documents = sorted(
        {o for _, _, o in source.triples(dossier, CAS.includesDocument) if isinstance(o, Iri)},
        key=lambda term: term.value,
    )
    subjects.update(documents)

    manifest = Graph()
    for subject in subjects:
        for triple in source.triples(subject):
            if triple[1] != S.permission:
                manifest.add(triple)
    entries = []
    for document in documents:
        path = _archive_path(document)
        manifest.add((document, CAS.archivePath, Literal(path)))
        entries.append((path, document))
    return manifest, entries


def export_package(store: QuadStore, dossier: Iri, files_dir: Path) -> bytes:
    """Pack a dossier into ZIP bytes, manifest first, documents after."""
    manifest, entries = build_manifest(store, dossier)
    payload = []
    for path, document in entries:
        file_path = Path(files_dir) / path.split("/", 1)[1]
        if not file_path.exists():
            raise UnknownResourceError(f"stored file for {document} is missing")
        payload.append((path, file_path.read_bytes()))

    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        _write_entry(archive, MANIFEST_NAME, serialize_turtle(manifest, WELL_KNOWN_PREFIXES).encode("utf-8"))
        for path, data in payload:
            _write_entry(archive, path, data)
    return buffer.getvalue()


def _write_entry(archive: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    archive.writestr(info, data)


def _well_formed_entry_name(name: str) -> bool:
    if name.startswith("/") or ".." in name.split("/"):
        return False
    head, _, tail = name.partition("/")
    return head == "documents" and tail != "" and "/" not in tail


def validate_package(data: bytes) -> "list[str]":
    """Every reason this byte string is not a trustworthy package.

    An empty list means the Package invariants all hold. Issues name the
    violated rule together with the offending path or IRI.
    """
    issues: "list[str]" = []
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except (zipfile.BadZipFile, ValueError) as exc:
        return [f"not a ZIP archive: {exc}"]

    names = archive.namelist()
    if len(names) != len(set(names)):
        issues.append("duplicate archive entry names")
    entry_paths = set()
    for name in names:
        if name == MANIFEST_NAME:
            continue
        if not _well_formed_entry_name(name):
            issues.append(f"archive entry outside documents/: {name!r}")
        else:
            entry_paths.add(name)

    if MANIFEST_NAME not in names:
        issues.append(f"missing {MANIFEST_NAME}")
        return issues
    try:
        manifest = parse_turtle(archive.read(MANIFEST_NAME).decode("utf-8"))
    except UnicodeDecodeError:
        issues.append(f"{MANIFEST_NAME} is not UTF-8")
        return issues
    except TurtleParseError as exc:
        issues.append(f"{MANIFEST_NAME} does not parse: {exc}")
        return issues

    packages = sorted(
        {s for s, _, _ in manifest.triples(None, RDF.type, CAS.Package) if isinstance(s, Iri)},
        key=lambda term: term.value,
    )
    if not packages:
        issues.append("manifest declares no package node")
    elif len(packages) > 1:
        listed = ", ".join(p.value for p in packages)
        issues.append(f"manifest declares more than one package node: {listed}")
    else:
        kind = manifest.value(packages[0], CAS.packageKind)
        if kind is None:
            issues.append(f"package node {packages[0]} has no package kind")
        elif kind not in PACKAGE_KINDS:
            issues.append(f"package node {packages[0]} has unknown kind {kind}")

    declared: "dict[str, Iri]" = {}
    for subject, _, obj in sorted(manifest.triples(None, CAS.archivePath), key=lambda t: str(t)):
        if not isinstance(subject, Iri) or not isinstance(obj, Literal):
            issues.append(f"malformed archive-path triple on {subject}")
            continue
        path = obj.lexical
        if not _well_formed_entry_name(path):
            issues.append(f"archive path escapes documents/: {path!r} on {subject}")
            continue
        if path in declared:
            issues.append(f"archive path {path!r} declared twice")
            continue
        declared[path] = subject

    for path, document in sorted(declared.items()):
        if path not in entry_paths:
            issues.append(f"missing archive entry {path!r} for {document}")
            continue
        body = archive.read(path)
        expected = manifest.value(document, CAS.sha256)
        if not isinstance(expected, Literal):
            issues.append(f"document {document} has no sha256 in the manifest")
        elif hashlib.sha256(body).hexdigest() != expected.lexical:
            issues.append(f"sha256 mismatch for {path!r}")
    for path in sorted(entry_paths - set(declared)):
        issues.append(f"orphan archive entry {path!r} not declared in the manifest")
    return issues


def _manifest_package(manifest: Graph) -> "tuple[Iri, Iri]":
    node = next(s for s, _, _ in manifest.triples(None, RDF.type, CAS.Package) if isinstance(s, Iri))
    kind = manifest.value(node, CAS.packageKind)
    assert isinstance(kind, Iri)
    return node, kind


def import_package(service: "ContentAccessService", actor: ActorId, data: bytes) -> ImportReport:
    """Bring a validated package into the actor's graph and file space.

    Every imported node gets a fresh IRI under this service's base; the
    original is kept on a cas:importedFrom triple, which also makes the
    operation idempotent: a package (or single document) seen before is
    skipped with a warning. The commit is all-or-nothing.
    """
    issues = validate_package(data)
    if issues:
        raise PackageInvalidError(issues)

    archive = zipfile.ZipFile(io.BytesIO(data))
    manifest = parse_turtle(archive.read(MANIFEST_NAME).decode("utf-8"))
    source_dossier, kind = _manifest_package(manifest)
    graph = service.store.graph(actor.graph_iri)
    if any(True for _ in graph.triples(None, CAS.importedFrom, source_dossier)):
        return ImportReport(0, 0, kind, [f"package {source_dossier} already imported; skipped"])

    warnings: "list[str]" = []
    new_uuid = uuid.uuid4()
    dossier = service.dossier_iri(str(new_uuid))
    mapping: "dict[Term, Term]" = {source_dossier: dossier}
    fragment_prefix = source_dossier.value + "#"
    for subject in manifest.subjects():
        if isinstance(subject, Iri) and subject.value.startswith(fragment_prefix):
            mapping[subject] = Iri(dossier.value + subject.value[len(source_dossier.value) :])
        elif isinstance(subject, BlankNode):
            mapping[subject] = BlankNode(f"i{new_uuid.hex[:10]}{subject.label}")

    # Documents: fresh bytes-backed records; dedupe on (sha256, source IRI).
    paths = {}
    for subject, _, obj in manifest.triples(None, CAS.archivePath):
        assert isinstance(subject, Iri) and isinstance(obj, Literal)
        paths[subject] = obj.lexical
    document_nodes = set(paths)
    staged: "list[tuple[str, bytes]]" = []
    quads: "list[Quad]" = []
    documents_added = 0
    for source_doc in sorted(document_nodes, key=lambda term: term.value):
        body = archive.read(paths[source_doc])
        digest = _sha256(body)
        existing = _already_imported(graph, digest, source_doc)
        if existing is not None:
            mapping[source_doc] = existing
            warnings.append(f"document {source_doc} already imported as {existing}; skipped")
            continue
        doc_id = str(uuid.uuid4())
        doc_iri = service.document_iri(doc_id)
        mapping[source_doc] = doc_iri
        staged.append((doc_id, body))
        documents_added += 1
        filename = manifest.value(source_doc, CAS.filename)
        media_type = manifest.value(source_doc, CAS.mediaType)
        quads.extend(
            [
                Quad(actor.graph_iri, doc_iri, RDF.type, CAS.Document),
                Quad(
                    actor.graph_iri,
                    doc_iri,
                    CAS.filename,
                    filename if isinstance(filename, Literal) else Literal(doc_id),
                ),
                Quad(
                    actor.graph_iri,
                    doc_iri,
                    CAS.mediaType,
                    media_type if isinstance(media_type, Literal) else Literal("application/octet-stream"),
                ),
                Quad(actor.graph_iri, doc_iri, CAS.sha256, Literal(digest)),
                Quad(actor.graph_iri, doc_iri, CAS.size, Literal(str(len(body)), XSD.integer)),
                Quad(actor.graph_iri, doc_iri, CAS.importedFrom, source_doc),
            ]
        )

    def rewrite(term: Term) -> Term:
        return mapping.get(term, term)

    for subject, predicate, obj in manifest.sorted():
        if predicate == CAS.archivePath or subject in document_nodes:
            continue
        quads.append(Quad(actor.graph_iri, rewrite(subject), predicate, rewrite(obj)))
    quads.append(Quad(actor.graph_iri, dossier, CAS.importedFrom, source_dossier))

    # Files first, then the store; roll both back if the commit fails.
    service.config.files_dir.mkdir(parents=True, exist_ok=True)
    written: "list[Path]" = []
    inserted: "list[Quad]" = []
    try:
        for doc_id, body in staged:
            target = service.config.files_dir / doc_id
            target.write_bytes(body)
            written.append(target)
        for quad in quads:
            if service.store.insert(quad):
                inserted.append(quad)
        service.persist()
    except Exception:
        for quad in inserted:
            service.store.delete(quad)
        for target in written:
            target.unlink(missing_ok=True)
        raise
    return ImportReport(len(inserted), documents_added, kind, warnings)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _already_imported(graph: Graph, digest: str, source: Iri) -> Optional[Iri]:
    for subject, _, _ in graph.triples(None, CAS.importedFrom, source):
        if isinstance(subject, Iri) and (subject, CAS.sha256, Literal(digest)) in graph:
            return subject
    return None

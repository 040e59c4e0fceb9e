"""The content access service core: actors, documents, permissions.

Each actor owns one named graph; documents live on disk under opaque
UUIDs with their metadata in the owner's graph; access control is a
single rule pair: you own a resource because it sits in your graph, or
you were granted it by an explicit permission triple. Everything else is
denied.
"""

from __future__ import annotations

import enum
import hashlib
import os
import re
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Union

from .rdf import Graph, Iri, Literal, Quad, QuadPattern, QuadStore, load_store, save_store
from .vocab import CAS, RDF, S, WELL_KNOWN_PREFIXES, XSD
from .webid import IdentityBundle, generate_identity, load_identity, save_identity

_SLUG_RE = re.compile(r"[a-z0-9-]+\Z")
_LOOPBACK_HOSTS = ("127.0.0.1", "::1", "localhost")


class ServiceError(Exception):
    """Base for service-level failures that map onto protocol errors."""


class ValidationError(ServiceError):
    pass


class DuplicateActorError(ServiceError):
    pass


class UnknownActorError(ServiceError):
    pass


class UnknownResourceError(ServiceError):
    pass


class OwnershipError(ServiceError):
    pass


@dataclass(frozen=True, slots=True)
class ActorId:
    slug: str
    graph_iri: Iri


@dataclass(frozen=True, slots=True)
class DocumentRecord:
    id: str
    iri: Iri
    filename: str
    media_type: str
    sha256: str
    size: int
    owner: ActorId


class AllowReason(enum.Enum):
    Owner = "owner"
    Granted = "granted"


class DenyReason(enum.Enum):
    NoPermission = "no-permission"
    NoSuchResource = "no-such-resource"
    Unauthenticated = "unauthenticated"


@dataclass(frozen=True, slots=True)
class Allow:
    reason: AllowReason


@dataclass(frozen=True, slots=True)
class Deny:
    reason: DenyReason


AccessDecision = Union[Allow, Deny]


@dataclass(frozen=True)
class ServiceConfig:
    """Where a service lives and how it listens.

    TLS material switches the transport into production mode and then
    the base IRI must be https. Without TLS the service runs in plain
    test mode, which refuses to listen anywhere but loopback.
    """

    base_iri: Iri
    data_dir: Path
    listen_host: str = "127.0.0.1"
    listen_port: int = 8440
    tls_cert: Optional[Path] = None
    tls_key: Optional[Path] = None
    client_ca: Optional[Path] = None
    enforce_cert_expiry: bool = False
    static_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        if self.base_iri.value.endswith("/"):
            object.__setattr__(self, "base_iri", Iri(self.base_iri.value.rstrip("/")))
        if (self.tls_cert is None) != (self.tls_key is None):
            raise ValidationError("tls_cert and tls_key must be configured together")
        if self.tls_mode:
            if self.base_iri.scheme != "https":
                raise ValidationError("base_iri must be https when TLS is configured")
        elif self.listen_host not in _LOOPBACK_HOSTS:
            raise ValidationError(
                f"plain transport is a loopback-only test mode; refusing to listen on {self.listen_host!r}"
            )

    @property
    def tls_mode(self) -> bool:
        return self.tls_cert is not None

    @property
    def store_dir(self) -> Path:
        return Path(self.data_dir) / "store"

    @property
    def files_dir(self) -> Path:
        return Path(self.data_dir) / "files"

    @property
    def actors_dir(self) -> Path:
        return Path(self.data_dir) / "actors"


# --- Access control ---------------------------------------------------------


def _owning_graphs(store: QuadStore, resource: Iri) -> "list[Iri]":
    """Graphs in which the resource occurs as a subject."""
    seen: "list[Iri]" = []
    for quad in store.match(QuadPattern(subject=resource)):
        if quad.graph not in seen:
            seen.append(quad.graph)
    return seen


def _graph_webids(graph: Graph) -> "set[Iri]":
    return {o for _, _, o in graph.triples(None, S.webid, None) if isinstance(o, Iri)}


def check_access(store: QuadStore, resource: Iri, requester: Optional[Iri]) -> AccessDecision:
    """Decide whether requester may read resource. Default is denial.

    Allow(Owner) when the resource sits in a graph whose actor record
    carries the requester's WebID; Allow(Granted) when that graph holds
    an explicit (resource, permission, requester) triple.
    """
    if requester is None:
        return Deny(DenyReason.Unauthenticated)
    graphs = _owning_graphs(store, resource)
    if not graphs:
        return Deny(DenyReason.NoSuchResource)
    snapshots = [(name, store.graph(name)) for name in graphs]
    for _, graph in snapshots:
        if requester in _graph_webids(graph):
            return Allow(AllowReason.Owner)
    for _, graph in snapshots:
        if (resource, S.permission, requester) in graph:
            return Allow(AllowReason.Granted)
    return Deny(DenyReason.NoPermission)


def grant_permission(store: QuadStore, owner: ActorId, resource: Iri, grantee: Iri) -> None:
    """Attach (resource, permission, grantee) in the owner's graph.

    The resource must already live there; permissions cannot be planted
    in other actors' graphs. Granting twice is a no-op.
    """
    graph = store.graph(owner.graph_iri)
    if not any(True for _ in graph.triples(resource, None, None)):
        raise OwnershipError(f"{resource} is not a resource in the graph of {owner.slug!r}")
    store.insert(Quad(owner.graph_iri, resource, S.permission, grantee))


def revoke_permission(store: QuadStore, owner: ActorId, resource: Iri, grantee: Iri) -> None:
    """Remove the permission triple; absent means done (idempotent)."""
    graph = store.graph(owner.graph_iri)
    if not any(True for _ in graph.triples(resource, None, None)):
        raise OwnershipError(f"{resource} is not a resource in the graph of {owner.slug!r}")
    store.delete(Quad(owner.graph_iri, resource, S.permission, grantee))


# --- The service ------------------------------------------------------------


class ContentAccessService:
    """One actor-hosting service instance over one store and data directory."""

    def __init__(self, config: ServiceConfig, store: Optional[QuadStore] = None) -> None:
        self.config = config
        self.store = store if store is not None else load_store(config.store_dir)
        self._mutate = threading.Lock()
        # Bumped whenever a profile changes; authentication caches key on it.
        self.profile_epoch = 0

    # -- naming conventions --

    @property
    def base_iri(self) -> Iri:
        return self.config.base_iri

    def graph_iri(self, slug: str) -> Iri:
        return Iri(f"{self.base_iri.value}/graphs/{slug}")

    def profile_iri(self, slug: str) -> Iri:
        return Iri(f"{self.base_iri.value}/profile/{slug}")

    def webid_for(self, slug: str) -> Iri:
        return Iri(f"{self.profile_iri(slug).value}#id")

    def document_iri(self, document_id: str) -> Iri:
        return Iri(f"{self.base_iri.value}/documents/{document_id}")

    def dossier_iri(self, dossier_id: str) -> Iri:
        return Iri(f"{self.base_iri.value}/dossiers/{dossier_id}")

    def actor_id(self, slug: str) -> ActorId:
        return ActorId(slug, self.graph_iri(slug))

    def record_iri(self, slug: str) -> Iri:
        """The actor's record node: the `<#>` of its graph document."""
        return Iri(f"{self.graph_iri(slug).value}#")

    # -- persistence --

    def persist(self) -> None:
        save_store(self.store, self.config.store_dir, WELL_KNOWN_PREFIXES)

    def commit(self, quads: "list[Quad]") -> int:
        """Insert a batch and persist it as one durable step."""
        with self._mutate:
            count = self.store.insert_all(quads)
            self.persist()
        return count

    # -- actors --

    def actor_exists(self, slug: str) -> bool:
        return self.store.has_graph(self.profile_iri(slug)) or (self.config.actors_dir / slug).exists()

    def actor_slugs(self) -> "list[str]":
        prefix = f"{self.base_iri.value}/profile/"
        return sorted(
            name.value[len(prefix) :] for name in self.store.graph_names() if name.value.startswith(prefix)
        )

    def actor_webid(self, slug: str) -> Iri:
        if not self.actor_exists(slug):
            raise UnknownActorError(f"no actor {slug!r}")
        return self.webid_for(slug)

    def slug_for(self, webid: Iri) -> Optional[str]:
        """The local actor owning this WebID, or None for a foreign one."""
        prefix = f"{self.base_iri.value}/profile/"
        value = webid.value
        if not (value.startswith(prefix) and value.endswith("#id")):
            return None
        slug = value[len(prefix) : -len("#id")]
        return slug if self.actor_exists(slug) else None

    def create_actor(
        self,
        slug: str,
        profile_attrs: Mapping[Iri, Literal],
        kind: Iri = CAS.Actor,
        common_name: Optional[str] = None,
        validity_days: int = 365,
    ) -> "tuple[ActorId, IdentityBundle]":
        """Provision an actor: identity, public profile graph, record graph."""
        if not _SLUG_RE.match(slug):
            raise ValidationError(f"slug must match [a-z0-9-]+: {slug!r}")
        with self._mutate:
            if self.actor_exists(slug):
                raise DuplicateActorError(f"actor {slug!r} already exists")
            webid = self.webid_for(slug)
            bundle = generate_identity(common_name or slug, webid, validity_days)
            save_identity(bundle, self.config.actors_dir / slug)

            self.store.replace_graph(self.profile_iri(slug), bundle.profile)
            self.profile_epoch += 1
            actor = self.actor_id(slug)
            record = self.record_iri(slug)
            self.store.insert(Quad(actor.graph_iri, record, RDF.type, kind))
            self.store.insert(Quad(actor.graph_iri, record, S.webid, webid))
            for attribute, value in profile_attrs.items():
                self.store.insert(Quad(actor.graph_iri, record, attribute, value))
            self.persist()
        return actor, bundle

    def actor_identity(self, slug: str) -> IdentityBundle:
        if not self.actor_exists(slug):
            raise UnknownActorError(f"no actor {slug!r}")
        return load_identity(self.config.actors_dir / slug)

    def profile_graph(self, slug: str) -> Graph:
        graph = self.store.graph(self.profile_iri(slug))
        if not graph:
            raise UnknownActorError(f"no actor {slug!r}")
        return graph

    def update_profile(self, slug: str, profile: Graph) -> None:
        with self._mutate:
            if not self.actor_exists(slug):
                raise UnknownActorError(f"no actor {slug!r}")
            self.store.replace_graph(self.profile_iri(slug), profile)
            self.profile_epoch += 1
            self.persist()

    # -- documents --

    def store_document(
        self,
        actor: ActorId,
        data: bytes,
        filename: str,
        media_type: str = "application/octet-stream",
    ) -> DocumentRecord:
        """Write the file, then commit its metadata; never one without the other."""
        if not data:
            raise ValidationError("document is empty")
        if not self.actor_exists(actor.slug):
            raise UnknownActorError(f"no actor {actor.slug!r}")
        document_id = str(uuid.uuid4())
        record = DocumentRecord(
            id=document_id,
            iri=self.document_iri(document_id),
            filename=filename or document_id,
            media_type=media_type or "application/octet-stream",
            sha256=hashlib.sha256(data).hexdigest(),
            size=len(data),
            owner=actor,
        )
        self.config.files_dir.mkdir(parents=True, exist_ok=True)
        path = self.config.files_dir / document_id
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        try:
            with self._mutate:
                self.store.insert_all(_document_quads(actor.graph_iri, record))
                self.persist()
        except Exception:
            path.unlink(missing_ok=True)
            raise
        return record

    def document_record(self, document_id: str) -> DocumentRecord:
        iri = self.document_iri(document_id)
        quads = self.store.match(QuadPattern(subject=iri))
        if not quads:
            raise UnknownResourceError(f"no document {document_id!r}")
        graph_name = quads[0].graph
        graph = self.store.graph(graph_name)
        slug = graph_name.value.rsplit("/", 1)[-1]
        return _record_from_graph(iri, document_id, graph, ActorId(slug, graph_name))

    def document_bytes(self, record: DocumentRecord) -> bytes:
        path = self.config.files_dir / record.id
        if not path.exists():
            raise UnknownResourceError(f"stored file for document {record.id!r} is missing")
        return path.read_bytes()

    def list_documents(self, actor: ActorId) -> "list[DocumentRecord]":
        graph = self.store.graph(actor.graph_iri)
        out = []
        for subject, _, _ in sorted(graph.triples(None, RDF.type, CAS.Document), key=lambda t: str(t[0])):
            assert isinstance(subject, Iri)
            document_id = subject.value.rsplit("/", 1)[-1]
            out.append(_record_from_graph(subject, document_id, graph, actor))
        return out

    def delete_document(self, actor: ActorId, document_id: str) -> DocumentRecord:
        """Drop a document: its file, metadata, grants, and dossier links."""
        record = self.document_record(document_id)
        if record.owner != actor:
            raise UnknownResourceError(f"no document {document_id!r}")
        with self._mutate:
            self.store.delete_matching(QuadPattern(graph=actor.graph_iri, subject=record.iri))
            self.store.delete_matching(QuadPattern(graph=actor.graph_iri, object=record.iri))
            self.persist()
        (self.config.files_dir / record.id).unlink(missing_ok=True)
        return record

    # -- permissions --

    def check_access(self, resource: Iri, requester: Optional[Iri]) -> AccessDecision:
        return check_access(self.store, resource, requester)

    def grant(self, owner: ActorId, resource: Iri, grantee: Iri) -> None:
        with self._mutate:
            grant_permission(self.store, owner, resource, grantee)
            self.persist()

    def revoke(self, owner: ActorId, resource: Iri, grantee: Iri) -> None:
        with self._mutate:
            revoke_permission(self.store, owner, resource, grantee)
            self.persist()

    def grants_of(self, actor: ActorId) -> "list[tuple[Iri, Iri]]":
        graph = self.store.graph(actor.graph_iri)
        pairs = [
            (s, o)
            for s, _, o in graph.triples(None, S.permission, None)
            if isinstance(s, Iri) and isinstance(o, Iri)
        ]
        return sorted(pairs, key=lambda pair: (pair[0].value, pair[1].value))


def _document_quads(graph_iri: Iri, record: DocumentRecord) -> "list[Quad]":
    return [
        Quad(graph_iri, record.iri, RDF.type, CAS.Document),
        Quad(graph_iri, record.iri, CAS.filename, Literal(record.filename)),
        Quad(graph_iri, record.iri, CAS.mediaType, Literal(record.media_type)),
        Quad(graph_iri, record.iri, CAS.sha256, Literal(record.sha256)),
        Quad(graph_iri, record.iri, CAS.size, Literal(str(record.size), XSD.integer)),
    ]


def _record_from_graph(iri: Iri, document_id: str, graph: Graph, owner: ActorId) -> DocumentRecord:
    def literal(predicate: Iri, default: str = "") -> str:
        value = graph.value(iri, predicate)
        return value.lexical if isinstance(value, Literal) else default

    size_text = literal(CAS.size, "0")
    return DocumentRecord(
        id=document_id,
        iri=iri,
        filename=literal(CAS.filename, document_id),
        media_type=literal(CAS.mediaType, "application/octet-stream"),
        sha256=literal(CAS.sha256),
        size=int(size_text) if size_text.lstrip("+-").isdigit() else 0,
        owner=owner,
    )

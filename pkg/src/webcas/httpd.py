"""The HTTP face of a content access service.

One port serves everything: public FOAF profiles, the owner-facing
graph and upload endpoints, and the cross-domain package downloads.
Client certificates are requested but never required by the transport;
endpoints that need an identity verify the presented certificate's
WebID claim per request, with a short-lived positive cache.

Two transports exist. With TLS material configured the server speaks
HTTPS and reads the peer certificate from the handshake (an optional
client CA bundle turns on certificate requests at the TLS layer). The
plain transport is a loopback-only test mode in which the client passes
its certificate as base64 DER in an X-Client-Certificate header; the
header is ignored entirely on TLS connections.
"""

from __future__ import annotations

import base64
import email.parser
import email.policy
import hashlib
import json
import mimetypes
import ssl
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from cryptography import x509

from .exchange import PackageInvalidError, export_package, import_package
from .rdf import Iri, IriError, TurtleParseError, parse_turtle, serialize_turtle
from .service import (
    ContentAccessService,
    Deny,
    DuplicateActorError,
    OwnershipError,
    ServiceConfig,
    ServiceError,
    UnknownActorError,
    UnknownResourceError,
    ValidationError,
)
from .vocab import RDF, S, WELL_KNOWN_PREFIXES
from .webid import Authenticated, HttpProfileFetcher, ProfileUnreachableError, verify_webid
from .workflow import DecisionOutcome, Selection, compose_application, record_decision

CERT_HEADER = "X-Client-Certificate"
MAX_BODY = 32 * 1024 * 1024
_NOT_FOUND_BODY = b"not found\n"


class AuthOutcome:
    """What the authenticator concluded about one request."""

    __slots__ = ("webid", "detail")

    def __init__(self, webid: Optional[Iri], detail: str = "") -> None:
        self.webid = webid
        self.detail = detail


class LocalFirstProfileFetcher:
    """Resolve profiles this service hosts from its own store; dereference
    everything else over the network like any other verifier would.
    """

    def __init__(self, service: ContentAccessService, timeout: float = 10.0) -> None:
        self._service = service
        self._remote = HttpProfileFetcher(timeout=timeout)

    def fetch(self, iri: Iri) -> "tuple[str, bytes]":
        prefix = f"{self._service.base_iri.value}/profile/"
        if iri.value.startswith(prefix):
            slug = iri.value[len(prefix) :]
            graph = self._service.store.graph(self._service.profile_iri(slug))
            if not graph:
                raise ProfileUnreachableError(f"no local profile for {iri}")
            return "text/turtle", serialize_turtle(graph, WELL_KNOWN_PREFIXES).encode("utf-8")
        return self._remote.fetch(iri)


class WebIdAuthenticator:
    """Per-request WebID verification with a short positive cache.

    Cache entries are keyed by the certificate's digest and die after
    the TTL or any profile update on this service, whichever is first.
    Failures are never cached.
    """

    def __init__(self, service: ContentAccessService, ttl: float = 60.0, fetcher=None) -> None:
        self._service = service
        self._ttl = ttl
        self._fetcher = fetcher if fetcher is not None else LocalFirstProfileFetcher(service)
        self._cache: "dict[str, tuple[Iri, float, int]]" = {}
        self._lock = threading.Lock()

    def authenticate(self, certificate_der: Optional[bytes]) -> AuthOutcome:
        if certificate_der is None:
            return AuthOutcome(None, "no client certificate presented")
        key = hashlib.sha256(certificate_der).hexdigest()
        epoch = self._service.profile_epoch
        with self._lock:
            hit = self._cache.get(key)
            if hit is not None:
                webid, deadline, cached_epoch = hit
                if time.monotonic() < deadline and cached_epoch == epoch:
                    return AuthOutcome(webid)
                del self._cache[key]
        try:
            certificate = x509.load_der_x509_certificate(certificate_der)
        except ValueError:
            return AuthOutcome(None, "client certificate is not valid DER")
        if self._service.config.enforce_cert_expiry and not _within_validity(certificate):
            return AuthOutcome(None, "client certificate expired or not yet valid")
        result = verify_webid(certificate, self._fetcher)
        if isinstance(result, Authenticated):
            with self._lock:
                self._cache[key] = (result.webid, time.monotonic() + self._ttl, epoch)
            return AuthOutcome(result.webid)
        detail = f"webid verification failed: {result.reason.name}"
        if result.detail:
            detail += f" ({result.detail})"
        return AuthOutcome(None, detail)


def _within_validity(certificate: "x509.Certificate") -> bool:
    from datetime import datetime, timezone

    now = datetime.now(timezone.utc)
    return certificate.not_valid_before_utc <= now <= certificate.not_valid_after_utc


class CasRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "CasHttpServer"

    # -- plumbing --

    def log_message(self, format: str, *args) -> None:
        if self.server.verbose:
            super().log_message(format, *args)

    def _send(
        self,
        status: int,
        content_type: str,
        body: bytes,
        extra: "Optional[dict[str, str]]" = None,
    ) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        if self._request_body_pending():
            # Responding before the request body was read: the stream is
            # unusable for keep-alive, so close instead of desyncing.
            self.close_connection = True
            self.send_header("Connection", "close")
        for name, value in (extra or {}).items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(body)

    def _request_body_pending(self) -> bool:
        length = self.headers.get("Content-Length")
        return (
            length is not None
            and length.isdigit()
            and int(length) > 0
            and not getattr(self, "_body_consumed", False)
        )

    def _not_found(self) -> None:
        # One canonical body for absent resources AND denied permissions,
        # so responses cannot be used to probe which dossiers exist.
        self._send(404, "text/plain; charset=utf-8", _NOT_FOUND_BODY)

    def _unauthorized(self, detail: str) -> None:
        self._send(401, "text/plain; charset=utf-8", f"authentication required: {detail}\n".encode())

    def _invalid(self, detail: str) -> None:
        self._send(422, "text/plain; charset=utf-8", f"invalid request: {detail}\n".encode())

    def _json(self, status: int, payload: object, extra: "Optional[dict[str, str]]" = None) -> None:
        body = json.dumps(payload, indent=2, sort_keys=True).encode("utf-8") + b"\n"
        self._send(status, "application/json", body, extra)

    def _client_certificate(self) -> Optional[bytes]:
        if self.server.tls_mode:
            # The handshake is authoritative; a spoofable header never is.
            der = self.connection.getpeercert(binary_form=True)
            return der or None
        header = self.headers.get(CERT_HEADER)
        if header is None:
            return None
        try:
            return base64.b64decode(header, validate=True)
        except (ValueError, TypeError):
            return b"\x00"  # decodes to rejected DER, yielding a clean 401

    def _authenticate(self) -> AuthOutcome:
        return self.server.authenticator.authenticate(self._client_certificate())

    def _read_body(self) -> Optional[bytes]:
        length = self.headers.get("Content-Length")
        if length is None or not length.isdigit():
            self._invalid("missing Content-Length")
            return None
        size = int(length)
        if size > MAX_BODY:
            self._invalid(f"body exceeds {MAX_BODY} bytes")
            return None
        body = self.rfile.read(size)
        self._body_consumed = True
        return body

    def _read_json(self) -> "Optional[dict]":
        body = self._read_body()
        if body is None:
            return None
        try:
            payload = json.loads(body)
        except ValueError:
            self._invalid("body is not valid JSON")
            return None
        if not isinstance(payload, dict):
            self._invalid("body must be a JSON object")
            return None
        return payload

    @property
    def service(self) -> ContentAccessService:
        return self.server.service

    # -- routing --

    def do_GET(self) -> None:
        self._dispatch(self._route_get)

    def do_POST(self) -> None:
        self._dispatch(self._route_post)

    def do_DELETE(self) -> None:
        self._dispatch(self._route_delete)

    def _dispatch(self, route) -> None:
        self._body_consumed = False  # handler instances span keep-alive requests
        try:
            route()
        except ServiceError as error:
            self._service_error(error)
        except Exception:
            self._send(500, "text/plain; charset=utf-8", b"internal error\n")
            raise

    def _service_error(self, error: ServiceError) -> None:
        if isinstance(error, (UnknownActorError, UnknownResourceError)):
            self._not_found()
        elif isinstance(error, DuplicateActorError):
            self._send(409, "text/plain; charset=utf-8", f"conflict: {error}\n".encode())
        elif isinstance(error, PackageInvalidError):
            body = "invalid package:\n" + "".join(f"- {issue}\n" for issue in error.issues)
            self._send(422, "text/plain; charset=utf-8", body.encode())
        elif isinstance(error, (ValidationError, OwnershipError)):
            self._invalid(str(error))
        else:
            self._send(500, "text/plain; charset=utf-8", b"internal error\n")

    def _route_get(self) -> None:
        path = self.path.split("?", 1)[0]
        if path == "/" and self.server.static_dir is not None:
            self._send(302, "text/plain; charset=utf-8", b"", {"Location": "/static/"})
            return
        if path == "/session":
            self._get_session()
        elif path.startswith("/profile/"):
            self._get_profile(path[len("/profile/") :])
        elif path.startswith("/graphs/"):
            self._get_graph(path[len("/graphs/") :])
        elif path.startswith("/documents/"):
            self._get_document(path[len("/documents/") :])
        elif path.startswith("/package/"):
            self._get_package(path[len("/package/") :])
        elif path.startswith("/static/"):
            self._get_static(path[len("/static/") :])
        else:
            self._not_found()

    def _route_post(self) -> None:
        parts = self.path.split("?", 1)[0].strip("/").split("/")
        actions = {
            "documents": self._post_document,
            "grants": lambda slug: self._change_grants(slug, revoke=False),
            "import": self._post_import,
            "compose": self._post_compose,
            "decide": self._post_decide,
        }
        if len(parts) == 3 and parts[0] == "actors" and parts[2] in actions:
            actions[parts[2]](parts[1])
        else:
            self._not_found()

    def _route_delete(self) -> None:
        parts = self.path.split("?", 1)[0].strip("/").split("/")
        if len(parts) == 3 and parts[0] == "actors" and parts[2] == "grants":
            self._change_grants(parts[1], revoke=True)
        elif len(parts) == 2 and parts[0] == "documents":
            self._delete_document(parts[1])
        else:
            self._not_found()

    # -- public endpoints --

    def _get_profile(self, slug: str) -> None:
        try:
            graph = self.service.profile_graph(slug)
        except UnknownActorError:
            self._not_found()
            return
        body = serialize_turtle(graph, WELL_KNOWN_PREFIXES).encode("utf-8")
        self._send(200, "text/turtle; charset=utf-8", body)

    def _get_static(self, rel: str) -> None:
        root = self.server.static_dir
        if root is None:
            self._not_found()
            return
        name = rel or "index.html"
        candidate = (root / name).resolve()
        try:
            candidate.relative_to(root.resolve())
        except ValueError:
            self._not_found()
            return
        if candidate.is_dir():
            candidate = candidate / "index.html"
        if not candidate.is_file():
            self._not_found()
            return
        media_type = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        if media_type.startswith("text/") or media_type in ("application/javascript", "application/json"):
            media_type += "; charset=utf-8"
        self._send(200, media_type, candidate.read_bytes())

    # -- identity-gated endpoints --

    def _get_session(self) -> None:
        """Echo who the presented certificate authenticates as.

        A user interface asks this instead of inspecting certificates
        itself; the kind of the actor's record rides along as a hint for
        which views make sense.
        """
        outcome = self._authenticate()
        if outcome.webid is None:
            self._unauthorized(outcome.detail)
            return
        slug = self.service.slug_for(outcome.webid)
        kind = None
        if slug is not None:
            graph = self.service.store.graph(self.service.graph_iri(slug))
            term = graph.value(self.service.record_iri(slug), RDF.type)
            kind = term.value if isinstance(term, Iri) else None
        self._json(200, {"webid": outcome.webid.value, "slug": slug, "kind": kind})

    def _owner_or_none(self, slug: str) -> Optional[Iri]:
        """The authenticated WebID iff it is this actor's. Responds on failure."""
        if not self.service.actor_exists(slug):
            self._not_found()
            return None
        outcome = self._authenticate()
        if outcome.webid is None:
            self._unauthorized(outcome.detail)
            return None
        if outcome.webid != self.service.webid_for(slug):
            self._not_found()
            return None
        return outcome.webid

    def _get_graph(self, slug: str) -> None:
        if self._owner_or_none(slug) is None:
            return
        graph = self.service.store.graph(self.service.graph_iri(slug))
        body = serialize_turtle(graph, WELL_KNOWN_PREFIXES).encode("utf-8")
        self._send(200, "text/turtle; charset=utf-8", body)

    def _get_document(self, document_id: str) -> None:
        outcome = self._authenticate()
        if outcome.webid is None:
            self._unauthorized(outcome.detail)
            return
        resource = self.service.document_iri(document_id)
        decision = self.service.check_access(resource, outcome.webid)
        if isinstance(decision, Deny):
            self._not_found()
            return
        record = self.service.document_record(document_id)
        body = self.service.document_bytes(record)
        filename = record.filename.replace('"', "")
        self._send(
            200,
            record.media_type,
            body,
            {"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    def _get_package(self, dossier_id: str) -> None:
        outcome = self._authenticate()
        if outcome.webid is None:
            self._unauthorized(outcome.detail)
            return
        dossier = self.service.dossier_iri(dossier_id)
        decision = self.service.check_access(dossier, outcome.webid)
        if isinstance(decision, Deny):
            self._not_found()
            return
        data = export_package(self.service.store, dossier, self.service.config.files_dir)
        self._send(
            200,
            "application/zip",
            data,
            {"Content-Disposition": f'attachment; filename="{dossier_id}.zip"'},
        )

    def _post_document(self, slug: str) -> None:
        if self._owner_or_none(slug) is None:
            return
        body = self._read_body()
        if body is None:
            return
        content_type = self.headers.get("Content-Type", "")
        if not content_type.startswith("multipart/form-data"):
            self._invalid("expected a multipart/form-data upload")
            return
        part = _file_part(content_type, body)
        if part is None:
            self._invalid("multipart body carries no file part")
            return
        filename, media_type, data = part
        record = self.service.store_document(self.service.actor_id(slug), data, filename, media_type)
        self._json(
            201,
            {
                "iri": record.iri.value,
                "id": record.id,
                "filename": record.filename,
                "mediaType": record.media_type,
                "sha256": record.sha256,
                "size": record.size,
            },
            {"Location": record.iri.value},
        )

    def _change_grants(self, slug: str, revoke: bool) -> None:
        if self._owner_or_none(slug) is None:
            return
        body = self._read_body()
        if body is None:
            return
        try:
            graph = parse_turtle(body.decode("utf-8"))
        except (UnicodeDecodeError, TurtleParseError) as error:
            self._invalid(f"grant body does not parse as Turtle: {error}")
            return
        pairs = [
            (subject, obj)
            for subject, _, obj in graph.triples(None, S.permission)
            if isinstance(subject, Iri) and isinstance(obj, Iri)
        ]
        if not pairs:
            self._invalid("grant body contains no permission statement")
            return
        actor = self.service.actor_id(slug)
        for resource, grantee in pairs:
            if revoke:
                self.service.revoke(actor, resource, grantee)
            else:
                self.service.grant(actor, resource, grantee)
        self._json(200, {"revoked" if revoke else "granted": len(pairs)})

    def _post_compose(self, slug: str) -> None:
        if self._owner_or_none(slug) is None:
            return
        payload = self._read_json()
        if payload is None:
            return
        documents = payload.get("documents", [])
        statements = payload.get("statements", [])
        lists_of_strings = all(
            isinstance(field, list) and all(isinstance(value, str) for value in field)
            for field in (documents, statements)
        )
        if not lists_of_strings:
            self._invalid("'documents' and 'statements' must be lists of IRIs")
            return
        try:
            selection = Selection(
                frozenset(Iri(value) for value in documents),
                frozenset(Iri(value) for value in statements),
            )
        except IriError as error:
            self._invalid(str(error))
            return
        dossier = compose_application(self.service, self.service.actor_id(slug), selection)
        self._json(201, {"dossier": dossier.value}, {"Location": dossier.value})

    def _post_decide(self, slug: str) -> None:
        if self._owner_or_none(slug) is None:
            return
        payload = self._read_json()
        if payload is None:
            return
        application = payload.get("application")
        outcome_name = payload.get("outcome")
        comment = payload.get("comment", "")
        if (
            not isinstance(application, str)
            or outcome_name not in ("accepted", "rejected")
            or not isinstance(comment, str)
        ):
            self._invalid("need 'application', an 'outcome' of accepted or rejected, and a 'comment'")
            return
        outcome = DecisionOutcome.Accepted if outcome_name == "accepted" else DecisionOutcome.Rejected
        try:
            target = Iri(application)
        except IriError as error:
            self._invalid(str(error))
            return
        decision = record_decision(self.service, self.service.actor_id(slug), target, outcome, comment)
        self._json(
            201,
            {"decision": decision.iri.value, "outcome": decision.outcome.name},
            {"Location": decision.iri.value},
        )

    def _delete_document(self, document_id: str) -> None:
        outcome = self._authenticate()
        if outcome.webid is None:
            self._unauthorized(outcome.detail)
            return
        slug = self.service.slug_for(outcome.webid)
        if slug is None:
            # Foreign identities cannot own local documents; same masked
            # answer as any other unowned resource.
            self._not_found()
            return
        self.service.delete_document(self.service.actor_id(slug), document_id)
        self._json(200, {"deleted": document_id})

    def _post_import(self, slug: str) -> None:
        if self._owner_or_none(slug) is None:
            return
        body = self._read_body()
        if body is None:
            return
        report = import_package(self.service, self.service.actor_id(slug), body)
        self._json(
            200,
            {
                "triplesAdded": report.triples_added,
                "documentsAdded": report.documents_added,
                "packageKind": report.package_kind.value,
                "warnings": report.warnings,
            },
        )


def _file_part(content_type: str, body: bytes) -> "Optional[tuple[str, str, bytes]]":
    """The first uploaded file in a multipart body: (filename, type, bytes)."""
    header = f"Content-Type: {content_type}\r\nMIME-Version: 1.0\r\n\r\n".encode("ascii")
    message = email.parser.BytesParser(policy=email.policy.default).parsebytes(header + body)
    if not message.is_multipart():
        return None
    for part in message.iter_parts():
        filename = part.get_filename()
        if filename is None:
            continue
        payload = part.get_payload(decode=True)
        if payload is None:
            continue
        return filename, part.get_content_type(), payload
    return None


class CasHttpServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, service: ContentAccessService, verbose: bool = False) -> None:
        config = service.config
        super().__init__((config.listen_host, config.listen_port), CasRequestHandler)
        self.service = service
        self.authenticator = WebIdAuthenticator(service)
        self.verbose = verbose
        self.tls_mode = config.tls_mode
        self.static_dir = Path(config.static_dir) if config.static_dir else None
        if config.tls_mode:
            context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
            context.load_cert_chain(str(config.tls_cert), str(config.tls_key))
            if config.client_ca is not None:
                context.load_verify_locations(str(config.client_ca))
                context.verify_mode = ssl.CERT_OPTIONAL
            else:
                context.verify_mode = ssl.CERT_NONE
            self.socket = context.wrap_socket(self.socket, server_side=True)

    @property
    def url(self) -> str:
        host, port = self.server_address[0], self.server_address[1]
        scheme = "https" if self.tls_mode else "http"
        return f"{scheme}://{host}:{port}"


def serve(config: ServiceConfig, store=None, verbose: bool = False) -> CasHttpServer:
    """Bind a server for the given configuration; the caller runs it."""
    service = ContentAccessService(config, store)
    return CasHttpServer(service, verbose=verbose)


def start_in_thread(server: CasHttpServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, name=f"cas-{server.server_address[1]}", daemon=True)
    thread.start()
    return thread

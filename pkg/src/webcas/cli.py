"""Operator commands: run services, mint identities, drive actor steps.

Every subcommand is a thin adapter over exactly one module operation;
no rule lives only here. Machine-readable output goes to standard
output, diagnostics to standard error. Exit codes: 0 success, 1 usage,
2 denied or unauthenticated, 3 validation failure, 4 I/O or network.
"""

from __future__ import annotations

import argparse
import json
import mimetypes
import sys
from pathlib import Path
from typing import Optional

import requests

from .client import CasClient
from .config import load_scenario_fixtures, load_service_config, resolve_predicate, student_attribute_iri
from .exchange import export_package, import_package
from .httpd import CasHttpServer
from .rdf import Iri, IriError, Literal, StoreLoadError
from .service import ContentAccessService, ServiceError, ValidationError
from .vocab import CAS
from .webid import generate_identity, save_identity
from .workflow import (
    DecisionOutcome,
    ScenarioError,
    Selection,
    compose_application,
    format_transcript,
    record_decision,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DENIED = 2
EXIT_INVALID = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    """argparse, but usage problems exit 1 instead of 2."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="webcas", description="Content access service toolkit")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    serve = commands.add_parser("serve", help="run a service in the foreground")
    serve.add_argument("--config", required=True, type=Path)
    serve.add_argument("--verbose", action="store_true")

    identity = commands.add_parser("identity", help="identity material")
    identity_sub = identity.add_subparsers(dest="identity_command", required=True, parser_class=_Parser)
    new = identity_sub.add_parser("new", help="mint a key, certificate, and profile")
    new.add_argument("--name", required=True)
    new.add_argument("--webid", required=True)
    new.add_argument("--out", required=True, type=Path)
    new.add_argument("--days", type=int, default=365)

    actor = commands.add_parser("actor", help="actor-level operations")
    actor_sub = actor.add_subparsers(dest="actor_command", required=True, parser_class=_Parser)

    def actor_command(name: str, help_text: str, slug: bool = True) -> argparse.ArgumentParser:
        sub = actor_sub.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, type=Path)
        if slug:
            sub.add_argument("--slug", required=True)
        return sub

    create = actor_command("create", "provision an actor with identity and graphs")
    create.add_argument("--attr", action="append", default=[], metavar="KEY=VALUE")
    create.add_argument("--kind", default="cas:Actor")
    create.add_argument("--common-name")

    upload = actor_command("upload", "store a document in the actor's graph")
    upload.add_argument("--file", required=True, type=Path)
    upload.add_argument("--media-type")
    upload.add_argument("--name", help="stored filename (defaults to the file's name)")
    upload.add_argument("--json", action="store_true")

    for verb in ("grant", "revoke"):
        changer = actor_command(verb, f"{verb} read access on a resource")
        changer.add_argument("--resource", required=True)
        changer.add_argument("--grantee", required=True)

    compose = actor_command("compose", "assemble an application dossier")
    compose.add_argument("--document", action="append", default=[], metavar="IRI")
    compose.add_argument("--statement", action="append", default=[], metavar="PREDICATE")
    compose.add_argument("--json", action="store_true")

    export = actor_command("export", "write a dossier package to standard output", slug=False)
    export.add_argument("--dossier", required=True)

    importer = actor_command("import", "import a package file ('-' reads standard input)")
    importer.add_argument("--file", required=True)
    importer.add_argument("--json", action="store_true")

    fetch = actor_command("fetch", "download a remote package and import it")
    fetch.add_argument("--from", dest="remote", required=True, metavar="URL")
    fetch.add_argument("--dossier", required=True)
    fetch.add_argument("--json", action="store_true")

    decide = actor_command("decide", "record a decision on a fetched application")
    decide.add_argument("--application", required=True)
    decide.add_argument("--outcome", required=True, choices=["accepted", "rejected"])
    decide.add_argument("--comment", default="")
    decide.add_argument("--json", action="store_true")

    get_decision = actor_command("get-decision", "download a remote decision and import it")
    get_decision.add_argument("--from", dest="remote", required=True, metavar="URL")
    get_decision.add_argument("--decision", required=True)
    get_decision.add_argument("--json", action="store_true")

    scenario = commands.add_parser("scenario", help="demonstration workflow")
    scenario_sub = scenario.add_subparsers(dest="scenario_command", required=True, parser_class=_Parser)
    run = scenario_sub.add_parser("run", help="run the three-service enrollment scenario")
    run.add_argument("--fixtures", required=True, type=Path)

    return parser


# --- helpers -------------------------------------------------------------------


def _service(args) -> ContentAccessService:
    return ContentAccessService(load_service_config(args.config))


def _uuid_of(token: str) -> str:
    return token.rsplit("/", 1)[-1] if "/" in token else token


def _emit(args, payload: "dict[str, object]", plain: str) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stdout.write(plain + "\n")


def _parse_attrs(pairs: "list[str]") -> "dict[Iri, Literal]":
    attrs: "dict[Iri, Literal]" = {}
    for pair in pairs:
        key, separator, value = pair.partition("=")
        if not separator or not key:
            raise ValidationError(f"--attr expects KEY=VALUE, got {pair!r}")
        predicate = resolve_predicate(key) if ":" in key else student_attribute_iri(key)
        attrs[predicate] = Literal(value)
    return attrs


def _import_report(service: ContentAccessService, slug: str, data: bytes):
    return import_package(service, service.actor_id(slug), data)


# --- subcommand bodies ------------------------------------------------------------


def _cmd_serve(args) -> int:
    config = load_service_config(args.config)
    server = CasHttpServer(ContentAccessService(config), verbose=args.verbose)
    sys.stderr.write(f"serving {config.base_iri} on {server.url}\n")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        sys.stderr.write("shutting down\n")
    finally:
        server.server_close()
    return EXIT_OK


def _cmd_identity_new(args) -> int:
    bundle = generate_identity(args.name, args.webid, validity_days=args.days)
    save_identity(bundle, args.out)
    sys.stdout.write(f"{bundle.webid.value}\n")
    return EXIT_OK


def _cmd_actor_create(args) -> int:
    service = _service(args)
    actor, bundle = service.create_actor(
        args.slug,
        _parse_attrs(args.attr),
        kind=resolve_predicate(args.kind),
        common_name=args.common_name,
    )
    sys.stdout.write(f"{bundle.webid.value}\n{actor.graph_iri.value}\n")
    return EXIT_OK


def _cmd_actor_upload(args) -> int:
    service = _service(args)
    data = Path(args.file).read_bytes()
    filename = args.name or Path(args.file).name
    media_type = args.media_type or mimetypes.guess_type(filename)[0] or "application/octet-stream"
    record = service.store_document(service.actor_id(args.slug), data, filename, media_type)
    _emit(
        args,
        {
            "iri": record.iri.value,
            "id": record.id,
            "filename": record.filename,
            "mediaType": record.media_type,
            "sha256": record.sha256,
            "size": record.size,
        },
        record.iri.value,
    )
    return EXIT_OK


def _cmd_actor_grant(args, revoke: bool = False) -> int:
    service = _service(args)
    actor = service.actor_id(args.slug)
    resource, grantee = Iri(args.resource), Iri(args.grantee)
    if revoke:
        service.revoke(actor, resource, grantee)
    else:
        service.grant(actor, resource, grantee)
    sys.stdout.write(f"{'revoked' if revoke else 'granted'}\t{resource.value}\t{grantee.value}\n")
    return EXIT_OK


def _cmd_actor_compose(args) -> int:
    service = _service(args)
    selection = Selection(
        frozenset(Iri(token) for token in args.document),
        frozenset(resolve_predicate(token) for token in args.statement),
    )
    dossier = compose_application(service, service.actor_id(args.slug), selection)
    _emit(args, {"dossier": dossier.value}, dossier.value)
    return EXIT_OK


def _cmd_actor_export(args) -> int:
    service = _service(args)
    dossier = (
        Iri(args.dossier) if "/" in args.dossier else service.dossier_iri(args.dossier)
    )
    data = export_package(service.store, dossier, service.config.files_dir)
    sys.stdout.buffer.write(data)
    sys.stdout.buffer.flush()
    return EXIT_OK


def _cmd_actor_import(args) -> int:
    service = _service(args)
    data = sys.stdin.buffer.read() if args.file == "-" else Path(args.file).read_bytes()
    report = _import_report(service, args.slug, data)
    _emit(
        args,
        {
            "triplesAdded": report.triples_added,
            "documentsAdded": report.documents_added,
            "packageKind": report.package_kind.value,
            "warnings": report.warnings,
        },
        f"imported\t{report.documents_added} documents\t{report.triples_added} statements",
    )
    return EXIT_OK


def _fetch_and_import(args, service: ContentAccessService, dossier_token: str) -> "tuple[int, Optional[object]]":
    client = CasClient(args.remote, identity=service.config.actors_dir / args.slug)
    status, body = client.get_package(_uuid_of(dossier_token))
    if status in (401, 404):
        sys.stderr.write(f"access denied by {args.remote} (status {status})\n")
        return EXIT_DENIED, None
    if status != 200:
        sys.stderr.write(f"fetch failed with status {status}\n")
        return EXIT_IO, None
    return EXIT_OK, _import_report(service, args.slug, body)


def _cmd_actor_fetch(args) -> int:
    service = _service(args)
    code, report = _fetch_and_import(args, service, args.dossier)
    if code != EXIT_OK or report is None:
        return code
    _emit(
        args,
        {
            "triplesAdded": report.triples_added,
            "documentsAdded": report.documents_added,
            "packageKind": report.package_kind.value,
            "warnings": report.warnings,
        },
        f"fetched\t{report.documents_added} documents\t{report.triples_added} statements",
    )
    return EXIT_OK


def _cmd_actor_decide(args) -> int:
    service = _service(args)
    outcome = DecisionOutcome.Accepted if args.outcome == "accepted" else DecisionOutcome.Rejected
    decision = record_decision(
        service, service.actor_id(args.slug), Iri(args.application), outcome, args.comment
    )
    _emit(
        args,
        {"decision": decision.iri.value, "outcome": decision.outcome.name},
        decision.iri.value,
    )
    return EXIT_OK


def _cmd_actor_get_decision(args) -> int:
    service = _service(args)
    code, _ = _fetch_and_import(args, service, args.decision)
    if code != EXIT_OK:
        return code
    wanted = _uuid_of(args.decision)
    graph = service.store.graph(service.graph_iri(args.slug))
    local = None
    for subject, _, obj in graph.triples(None, CAS.importedFrom):
        if isinstance(obj, Iri) and obj.value.rsplit("/", 1)[-1] == wanted:
            local = subject
    if local is None:
        sys.stderr.write("imported decision not found in the actor graph\n")
        return EXIT_INVALID
    outcome_term = graph.value(local, CAS.outcome)
    outcome = next((o.name for o in DecisionOutcome if o.value == outcome_term), None)
    if outcome is None:
        sys.stderr.write("imported package carries no decision outcome\n")
        return EXIT_INVALID
    comment = graph.value(local, CAS.comment)
    comment_text = comment.lexical if isinstance(comment, Literal) else ""
    _emit(args, {"outcome": outcome, "comment": comment_text}, f"{outcome}\t{comment_text}")
    return EXIT_OK


def _cmd_scenario_run(args) -> int:
    from .scenario import run_from_fixtures

    try:
        transcript = run_from_fixtures(load_scenario_fixtures(args.fixtures))
    except ScenarioError as error:
        sys.stdout.write(format_transcript(error.transcript))
        sys.stderr.write(f"scenario failed: {error}\n")
        return EXIT_DENIED if error.denied else EXIT_IO
    sys.stdout.write(format_transcript(transcript))
    return EXIT_OK


# --- dispatch ---------------------------------------------------------------------


def main(argv: "Optional[list[str]]" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "identity":
            return _cmd_identity_new(args)
        if args.command == "scenario":
            return _cmd_scenario_run(args)
        actor_commands = {
            "create": _cmd_actor_create,
            "upload": _cmd_actor_upload,
            "grant": _cmd_actor_grant,
            "revoke": lambda a: _cmd_actor_grant(a, revoke=True),
            "compose": _cmd_actor_compose,
            "export": _cmd_actor_export,
            "import": _cmd_actor_import,
            "fetch": _cmd_actor_fetch,
            "decide": _cmd_actor_decide,
            "get-decision": _cmd_actor_get_decision,
        }
        return actor_commands[args.actor_command](args)
    except (ServiceError, IriError) as error:
        sys.stderr.write(f"error: {error}\n")
        return EXIT_INVALID
    except requests.RequestException as error:
        sys.stderr.write(f"network error: {error}\n")
        return EXIT_IO
    except (StoreLoadError, OSError) as error:
        sys.stderr.write(f"error: {error}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

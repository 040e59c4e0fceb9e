"""Boot three services from a fixture file and drive the enrollment run.

This is the headless stand-in for the demonstration screencast: three
content access services on loopback, one actor each, and the full event
chain executed over real authenticated HTTP fetches.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from .config import ScenarioFixtures, load_scenario_fixtures, student_attribute_iri
from .httpd import CasHttpServer, start_in_thread
from .rdf import Literal
from .service import ContentAccessService
from .vocab import CAS, S, XSD
from .workflow import ScenarioPlan, ScenarioRole, Transcript, run_scenario


def _ensure_actor(service: ContentAccessService, role) -> None:
    if service.actor_exists(role.slug):
        return
    attrs = {student_attribute_iri(key): Literal(value) for key, value in role.attributes.items()}
    kind = S.Student if role.role == "student" else CAS.University
    common_name = " ".join(
        part for part in (role.attributes.get("vorname"), role.attributes.get("name")) if part
    )
    service.create_actor(role.slug, attrs, kind=kind, common_name=common_name or role.slug)


def _role(role_fixture) -> "tuple[ScenarioRole, CasHttpServer]":
    service = ContentAccessService(role_fixture.service_config())
    _ensure_actor(service, role_fixture)
    server = CasHttpServer(service)
    start_in_thread(server)
    role = ScenarioRole(
        slug=role_fixture.slug,
        service=service,
        base_url=server.url,
        identity=service.actor_identity(role_fixture.slug),
    )
    return role, server


def _plan(fixtures: ScenarioFixtures, master_role: ScenarioRole) -> ScenarioPlan:
    student_attrs = fixtures.student.attributes
    holder_attrs = {
        student_attribute_iri(key): Literal(value)
        for key, value in student_attrs.items()
        if key in ("name", "vorname", "matrikelnummer")
    }
    degree = [
        (CAS.degreeTitle, Literal(fixtures.degree_title)),
        (CAS.awardedBy, Literal(fixtures.bachelor.attributes.get("name", fixtures.bachelor.slug))),
        (CAS.awardedOn, Literal(fixtures.degree_awarded_on, XSD.date)),
    ]
    transcript_body = (
        f"Transcript of records\n"
        f"Holder: {student_attrs.get('vorname', '')} {student_attrs.get('name', '')}\n"
        f"Matriculation: {student_attrs.get('matrikelnummer', '')}\n"
        f"Degree: {fixtures.degree_title}\n"
    ).encode("utf-8")
    return ScenarioPlan(
        holder_attrs=holder_attrs,
        degree=degree,
        documents=[(fixtures.document_filename, fixtures.document_media_type, transcript_body)],
        selection_documents=list(fixtures.selection_documents),
        statement_filter=list(fixtures.statement_filter),
        master_webid=fixtures.master_webid or master_role.webid,
        outcome=fixtures.outcome,
        comment=fixtures.comment,
    )


def run_from_fixtures(fixtures: "Union[ScenarioFixtures, Path, str]") -> Transcript:
    """Boot, run the scenario, and always tear the servers down."""
    if not isinstance(fixtures, ScenarioFixtures):
        fixtures = load_scenario_fixtures(fixtures)
    servers: "list[CasHttpServer]" = []
    try:
        bachelor, server = _role(fixtures.bachelor)
        servers.append(server)
        student, server = _role(fixtures.student)
        servers.append(server)
        master, server = _role(fixtures.master)
        servers.append(server)
        plan = _plan(fixtures, master)
        return run_scenario(bachelor, student, master, plan)
    finally:
        for server in servers:
            server.shutdown()
            server.server_close()

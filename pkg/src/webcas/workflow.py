"""The three-actor enrollment workflow as a guarded state machine.

A bachelor university issues a dossier, the student imports it and
composes an application, the master university fetches the application
after being granted access, records a decision, and the student finally
retrieves that decision after being granted access in turn. The chain is
strictly linear; every attempt to skip ahead is an ordering error, and
the two access grants are the only points where cross-domain reads stop
being denied.
"""

from __future__ import annotations

import enum
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import TYPE_CHECKING, Iterable, Mapping, Optional

from .exchange import import_package
from .rdf import Iri, Literal, Quad, Term
from .service import ActorId, OwnershipError, ServiceError, ValidationError
from .vocab import CAS, RDF

if TYPE_CHECKING:
    from .client import CasClient
    from .service import ContentAccessService
    from .webid import IdentityBundle


class EnrollmentState(enum.Enum):
    Start = "Start"
    BachelorDossierIssued = "BachelorDossierIssued"
    BachelorDataImported = "BachelorDataImported"
    ApplicationComposed = "ApplicationComposed"
    AccessGranted = "AccessGranted"
    DossierFetched = "DossierFetched"
    DecisionRecorded = "DecisionRecorded"
    DecisionAccessGranted = "DecisionAccessGranted"
    DecisionRetrieved = "DecisionRetrieved"


class EnrollmentEvent(enum.Enum):
    IssueBachelorDossier = "IssueBachelorDossier"
    ImportBachelorData = "ImportBachelorData"
    ComposeApplication = "ComposeApplication"
    GrantDossierAccess = "GrantDossierAccess"
    FetchDossier = "FetchDossier"
    RecordDecision = "RecordDecision"
    GrantDecisionAccess = "GrantDecisionAccess"
    RetrieveDecision = "RetrieveDecision"


# The one legal path; DecisionRetrieved is terminal and absorbs nothing.
CHAIN: "tuple[tuple[EnrollmentState, EnrollmentEvent, EnrollmentState], ...]" = (
    (EnrollmentState.Start, EnrollmentEvent.IssueBachelorDossier, EnrollmentState.BachelorDossierIssued),
    (
        EnrollmentState.BachelorDossierIssued,
        EnrollmentEvent.ImportBachelorData,
        EnrollmentState.BachelorDataImported,
    ),
    (
        EnrollmentState.BachelorDataImported,
        EnrollmentEvent.ComposeApplication,
        EnrollmentState.ApplicationComposed,
    ),
    (EnrollmentState.ApplicationComposed, EnrollmentEvent.GrantDossierAccess, EnrollmentState.AccessGranted),
    (EnrollmentState.AccessGranted, EnrollmentEvent.FetchDossier, EnrollmentState.DossierFetched),
    (EnrollmentState.DossierFetched, EnrollmentEvent.RecordDecision, EnrollmentState.DecisionRecorded),
    (
        EnrollmentState.DecisionRecorded,
        EnrollmentEvent.GrantDecisionAccess,
        EnrollmentState.DecisionAccessGranted,
    ),
    (
        EnrollmentState.DecisionAccessGranted,
        EnrollmentEvent.RetrieveDecision,
        EnrollmentState.DecisionRetrieved,
    ),
)

_TRANSITIONS = {(state, event): target for state, event, target in CHAIN}


class IllegalTransition(ServiceError):
    def __init__(self, state: EnrollmentState, event: EnrollmentEvent) -> None:
        super().__init__(f"event {event.value} is not legal in state {state.value}")
        self.state = state
        self.event = event


def advance(state: EnrollmentState, event: EnrollmentEvent) -> EnrollmentState:
    """The next state, or IllegalTransition naming both inputs."""
    target = _TRANSITIONS.get((state, event))
    if target is None:
        raise IllegalTransition(state, event)
    return target


class DecisionOutcome(enum.Enum):
    Accepted = CAS.Accepted
    Rejected = CAS.Rejected


@dataclass(frozen=True, slots=True)
class Selection:
    """What a student chooses to disclose in one application."""

    document_iris: "frozenset[Iri]"
    statement_filter: "frozenset[Iri]"


@dataclass(frozen=True, slots=True)
class Decision:
    iri: Iri
    outcome: DecisionOutcome
    comment: Literal
    application_ref: Iri


@dataclass(frozen=True, slots=True)
class TranscriptEntry:
    timestamp: str
    actor: str
    event: str
    result: str

    def line(self) -> str:
        return "\t".join((self.timestamp, self.actor, self.event, self.result))


Transcript = list[TranscriptEntry]


def format_transcript(transcript: "list[TranscriptEntry]") -> str:
    return "".join(entry.line() + "\n" for entry in transcript)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


# --- Actor-level procedures ---------------------------------------------------


def issue_bachelor_dossier(
    service: "ContentAccessService",
    actor: ActorId,
    holder_attrs: Mapping[Iri, Term],
    degree: Iterable["tuple[Iri, Term]"],
    documents: Iterable["tuple[str, str, bytes]"] = (),
) -> Iri:
    """Mint a bachelor dossier: degree statements, holder attributes, and
    any supporting documents. A dossier without a single degree statement
    is not a bachelor dossier.
    """
    degree_pairs = list(degree)
    if not degree_pairs:
        raise ValidationError("a bachelor dossier must assert at least one degree statement")
    stored = [
        service.store_document(actor, data, filename, media_type)
        for filename, media_type, data in documents
    ]
    dossier = service.dossier_iri(str(uuid.uuid4()))
    degree_node = Iri(dossier.value + "#degree")
    quads = [
        Quad(actor.graph_iri, dossier, RDF.type, CAS.Package),
        Quad(actor.graph_iri, dossier, CAS.packageKind, CAS.BachelorDossier),
        Quad(actor.graph_iri, dossier, CAS.degree, degree_node),
        Quad(actor.graph_iri, degree_node, RDF.type, CAS.Degree),
    ]
    quads.extend(Quad(actor.graph_iri, degree_node, p, o) for p, o in degree_pairs)
    quads.extend(Quad(actor.graph_iri, dossier, p, o) for p, o in holder_attrs.items())
    quads.extend(Quad(actor.graph_iri, dossier, CAS.includesDocument, record.iri) for record in stored)
    service.commit(quads)
    return dossier


def compose_application(service: "ContentAccessService", actor: ActorId, selection: Selection) -> Iri:
    """Assemble an application dossier from the student's own material.

    Only documents in the student's graph qualify; the statement filter
    picks which record statements travel along. Each call mints a fresh
    dossier, so different universities can receive different selections.
    """
    graph = service.store.graph(actor.graph_iri)
    for document in sorted(selection.document_iris, key=lambda term: term.value):
        if not any(True for _ in graph.triples(document, None, None)):
            raise OwnershipError(f"{document} is not a document in the graph of {actor.slug!r}")
    dossier = service.dossier_iri(str(uuid.uuid4()))
    quads = [
        Quad(actor.graph_iri, dossier, RDF.type, CAS.Package),
        Quad(actor.graph_iri, dossier, CAS.packageKind, CAS.ApplicationDossier),
    ]
    record = service.record_iri(actor.slug)
    for predicate in sorted(selection.statement_filter, key=lambda term: term.value):
        for _, _, obj in graph.triples(record, predicate):
            quads.append(Quad(actor.graph_iri, dossier, predicate, obj))
    for document in sorted(selection.document_iris, key=lambda term: term.value):
        quads.append(Quad(actor.graph_iri, dossier, CAS.includesDocument, document))
    service.commit(quads)
    return dossier


def record_decision(
    service: "ContentAccessService",
    actor: ActorId,
    application: Iri,
    outcome: DecisionOutcome,
    comment: str,
) -> Decision:
    """Store the university's decision, linked to the application it
    answers (by the application's source IRI when it was imported).
    """
    graph = service.store.graph(actor.graph_iri)
    if not any(True for _ in graph.triples(application, None, None)):
        raise OwnershipError(f"{application} is not in the graph of {actor.slug!r}")
    source = graph.value(application, CAS.importedFrom)
    application_ref = source if isinstance(source, Iri) else application
    decision_iri = service.dossier_iri(str(uuid.uuid4()))
    comment_literal = Literal(comment)
    quads = [
        Quad(actor.graph_iri, decision_iri, RDF.type, CAS.Package),
        Quad(actor.graph_iri, decision_iri, CAS.packageKind, CAS.Decision),
        Quad(actor.graph_iri, decision_iri, CAS.outcome, outcome.value),
        Quad(actor.graph_iri, decision_iri, CAS.comment, comment_literal),
        Quad(actor.graph_iri, decision_iri, CAS.applicationRef, application_ref),
    ]
    service.commit(quads)
    return Decision(decision_iri, outcome, comment_literal, application_ref)


# --- The demonstration scenario ------------------------------------------------


class ScenarioError(ServiceError):
    """A scenario step failed; the transcript up to the failure rides along."""

    def __init__(self, message: str, transcript: "list[TranscriptEntry]", denied: bool = False) -> None:
        super().__init__(message)
        self.transcript = transcript
        self.denied = denied


@dataclass
class ScenarioRole:
    """One booted CAS plus the actor driving it."""

    slug: str
    service: "ContentAccessService"
    base_url: str
    identity: "IdentityBundle"

    @property
    def actor(self) -> ActorId:
        return self.service.actor_id(self.slug)

    @property
    def webid(self) -> Iri:
        return self.identity.webid


@dataclass(frozen=True)
class ScenarioPlan:
    """Everything variable about a run, resolved from the fixture file."""

    holder_attrs: "dict[Iri, Term]"
    degree: "list[tuple[Iri, Term]]"
    documents: "list[tuple[str, str, bytes]]"
    selection_documents: "list[str]"
    statement_filter: "list[Iri]"
    master_webid: Iri
    outcome: DecisionOutcome
    comment: str


def run_scenario(
    bachelor: ScenarioRole,
    student: ScenarioRole,
    master: ScenarioRole,
    plan: ScenarioPlan,
    client_factory: "Optional[type[CasClient]]" = None,
) -> "list[TranscriptEntry]":
    """Drive the full enrollment chain across three reachable services.

    Local steps call the owning service directly; every cross-domain read
    is a real authenticated package fetch. The two pre-grant fetches are
    asserted to be denied, so the run proves the default-deny behavior
    rather than assuming it.
    """
    if client_factory is None:
        from .client import CasClient as client_factory  # deferred: client pulls in HTTP machinery

    state = EnrollmentState.Start
    transcript: "list[TranscriptEntry]" = []

    def note(actor: str, event: str, result: str) -> None:
        transcript.append(TranscriptEntry(_now(), actor, event, result))

    def fail(message: str, denied: bool = False) -> ScenarioError:
        return ScenarioError(message, transcript, denied)

    def step(role: ScenarioRole, event: EnrollmentEvent, act) -> None:
        nonlocal state
        state = advance(state, event)
        note(role.slug, event.value, act())

    def fetch_package(caller: ScenarioRole, host: ScenarioRole, dossier: Iri) -> "tuple[int, bytes]":
        client = client_factory(host.base_url, identity=caller.identity)
        return client.get_package(dossier.value.rsplit("/", 1)[-1])

    # 1. The bachelor university issues the dossier and opens it to the student.
    def issue() -> str:
        nonlocal dossier_b
        dossier_b = issue_bachelor_dossier(
            bachelor.service, bachelor.actor, plan.holder_attrs, plan.degree, plan.documents
        )
        bachelor.service.grant(bachelor.actor, dossier_b, student.webid)
        return f"issued {dossier_b} and granted access to {student.webid}"

    dossier_b = Iri("http://invalid.invalid/unset")
    step(bachelor, EnrollmentEvent.IssueBachelorDossier, issue)

    # 2. The student downloads the package and imports it.
    def import_bachelor() -> str:
        status, body = fetch_package(student, bachelor, dossier_b)
        if status != 200:
            raise fail(f"bachelor package fetch returned {status}", denied=status == 404)
        report = import_package(student.service, student.actor, body)
        return f"imported {report.documents_added} documents and {report.triples_added} statements"

    step(student, EnrollmentEvent.ImportBachelorData, import_bachelor)

    # 3. The student composes the application from an explicit selection.
    def compose() -> str:
        nonlocal dossier_a
        by_name = {record.filename: record.iri for record in student.service.list_documents(student.actor)}
        missing = [name for name in plan.selection_documents if name not in by_name]
        if missing:
            raise fail(f"selection names unknown documents: {', '.join(missing)}")
        selection = Selection(
            frozenset(by_name[name] for name in plan.selection_documents),
            frozenset(plan.statement_filter),
        )
        dossier_a = compose_application(student.service, student.actor, selection)
        return f"composed {dossier_a} with {len(plan.selection_documents)} documents"

    dossier_a = Iri("http://invalid.invalid/unset")
    step(student, EnrollmentEvent.ComposeApplication, compose)

    # Pre-grant probe: the master university must be turned away.
    status, _ = fetch_package(master, student, dossier_a)
    if status != 404:
        raise fail(f"pre-grant dossier fetch was not denied (status {status})")
    note(master.slug, EnrollmentEvent.FetchDossier.value, "denied before grant (404)")

    # 4. The student grants the configured master WebID access.
    def grant_dossier() -> str:
        student.service.grant(student.actor, dossier_a, plan.master_webid)
        return f"granted {plan.master_webid}"

    step(student, EnrollmentEvent.GrantDossierAccess, grant_dossier)

    # 5. The master university fetches and imports the application.
    def fetch_dossier() -> str:
        status, body = fetch_package(master, student, dossier_a)
        if status != 200:
            note(master.slug, EnrollmentEvent.FetchDossier.value, f"FAILED: fetch returned {status}")
            raise fail(f"application fetch returned {status}", denied=status == 404)
        report = import_package(master.service, master.actor, body)
        return f"fetched and imported {report.documents_added} documents"

    step(master, EnrollmentEvent.FetchDossier, fetch_dossier)

    # 6. The master university records its decision.
    def decide() -> str:
        nonlocal decision
        graph = master.service.store.graph(master.actor.graph_iri)
        application = next(
            (s for s, _, _ in graph.triples(None, CAS.importedFrom, dossier_a) if isinstance(s, Iri)),
            None,
        )
        if application is None:
            raise fail("imported application not found in the master graph")
        decision = record_decision(master.service, master.actor, application, plan.outcome, plan.comment)
        return f"recorded {decision.outcome.name} as {decision.iri}"

    decision: Optional[Decision] = None
    step(master, EnrollmentEvent.RecordDecision, decide)
    assert decision is not None

    # Pre-grant probe: the student cannot see the decision yet.
    status, _ = fetch_package(student, master, decision.iri)
    if status != 404:
        raise fail(f"pre-grant decision fetch was not denied (status {status})")
    note(student.slug, EnrollmentEvent.RetrieveDecision.value, "denied before grant (404)")

    # 7. The master university opens the decision to the student.
    def grant_decision() -> str:
        master.service.grant(master.actor, decision.iri, student.webid)
        return f"granted {student.webid}"

    step(master, EnrollmentEvent.GrantDecisionAccess, grant_decision)

    # 8. The student retrieves the decision.
    def retrieve() -> str:
        status, body = fetch_package(student, master, decision.iri)
        if status != 200:
            raise fail(f"decision fetch returned {status}", denied=status == 404)
        import_package(student.service, student.actor, body)
        graph = student.service.store.graph(student.actor.graph_iri)
        local = next(
            (s for s, _, _ in graph.triples(None, CAS.importedFrom, decision.iri) if isinstance(s, Iri)),
            None,
        )
        outcome_term = graph.value(local, CAS.outcome) if local is not None else None
        outcome = next(
            (o for o in DecisionOutcome if o.value == outcome_term),
            None,
        )
        if outcome is None:
            raise fail("imported decision carries no recognizable outcome")
        return f"retrieved decision {outcome.name}; final state {state.value}"

    step(student, EnrollmentEvent.RetrieveDecision, retrieve)
    assert state is EnrollmentState.DecisionRetrieved
    return transcript

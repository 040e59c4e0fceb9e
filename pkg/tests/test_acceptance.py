"""Binding acceptance checks, one test per numbered criterion.

Each test asserts an externally observable guarantee of the package:
exact parse fidelity of the student record, parser round-trip safety,
the identity verification matrix, default-deny access control with an
independent oracle, lossless package exchange, the headless end-to-end
scenario, and state-machine exhaustion. The terminal summary prints one
verdict line per criterion.
"""

from __future__ import annotations

import configparser
import hashlib
import random
import socket
import string
import time
import uuid
import zipfile
from io import BytesIO
from pathlib import Path

import pytest
from cryptography import x509
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import rsa
from cryptography.x509.oid import NameOID

from webcas.cli import main as cli_main
from webcas.client import CasClient
from webcas.exchange import (
    MANIFEST_NAME,
    PackageInvalidError,
    export_package,
    import_package,
    validate_package,
)
from webcas.httpd import CasHttpServer, start_in_thread
from webcas.rdf import (
    BlankNode,
    Graph,
    Iri,
    Literal,
    Quad,
    QuadPattern,
    QuadStore,
    graph_isomorphic,
    parse_turtle,
    serialize_turtle,
)
from webcas.service import (
    Allow,
    AllowReason,
    ContentAccessService,
    Deny,
    DenyReason,
    ServiceConfig,
    check_access,
)
from webcas.vocab import CAS, CERT, RDF, S, XSD
from webcas.webid import (
    Authenticated,
    Denied,
    DenialReason,
    RsaPublicKey,
    StaticProfileFetcher,
    build_profile,
    verify_webid,
)
from webcas.workflow import CHAIN, EnrollmentEvent, EnrollmentState, IllegalTransition, advance

STUDENT_RECORD = Path(__file__).parent / "data" / "student_record.ttl"
DEMO_FIXTURES = Path(__file__).parent.parent / "demo.conf"


def free_port() -> int:
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


def make_service(directory: Path, name: str) -> ContentAccessService:
    port = free_port()
    return ContentAccessService(
        ServiceConfig(
            base_iri=Iri(f"http://127.0.0.1:{port}"),
            data_dir=directory / name,
            listen_port=port,
        )
    )


# --- criterion 1: the student record parses to exactly its seven statements -------


@pytest.mark.acceptance(1, "student record fidelity")
def test_student_record_parses_to_exact_triples():
    started = time.perf_counter()
    graph = parse_turtle(STUDENT_RECORD.read_text(encoding="utf-8"))
    subject = Iri("http://example.org/Student#")
    assert len(graph) == 7
    assert (subject, RDF.type, S.Student) in graph
    assert (subject, S.webid, Iri("http://example.org/StudentWebID")) in graph
    assert (subject, S.name, Literal("Dent")) in graph
    assert (subject, S.vorname, Literal("Stu")) in graph
    assert (subject, S.email, Literal("stu.dent@example.org")) in graph
    assert (subject, S.matrikelnummer, Literal("1-234-56")) in graph
    assert (subject, S.permission, Iri("http://hmsc.example.org/webid#id")) in graph
    assert graph_isomorphic(parse_turtle(serialize_turtle(graph)), graph)
    assert time.perf_counter() - started < 1.0


# --- criterion 2: serialize-then-parse is lossless on randomized graphs -----------

_HOSTS = ("alpha.example.org", "beta.example.org", "data.example.net")
_NASTY = 'They said "hi" \\ twice\nand left\ta mark: é世界'


def _random_iri(rng: random.Random) -> Iri:
    segments = "/".join(
        "".join(rng.choices(string.ascii_lowercase + string.digits, k=rng.randint(1, 8)))
        for _ in range(rng.randint(1, 3))
    )
    value = f"http://{rng.choice(_HOSTS)}/{segments}"
    if rng.random() < 0.4:
        value += "#" + "".join(rng.choices(string.ascii_lowercase, k=rng.randint(1, 5)))
    return Iri(value)


def _random_literal(rng: random.Random) -> Literal:
    lexical = "".join(rng.choices(_NASTY + string.ascii_letters, k=rng.randint(0, 24)))
    kind = rng.randrange(4)
    if kind == 0:
        return Literal(lexical)
    if kind == 1:
        return Literal(lexical, language=rng.choice(("en", "de", "fr", "en-US")))
    if kind == 2:
        return Literal(str(rng.randint(-(10**9), 10**9)), datatype=XSD.integer)
    return Literal(lexical, datatype=_random_iri(rng))


def _random_graph(rng: random.Random) -> Graph:
    def subject():
        return BlankNode(f"b{rng.randrange(6)}") if rng.random() < 0.25 else _random_iri(rng)

    def obj():
        roll = rng.random()
        if roll < 0.2:
            return BlankNode(f"b{rng.randrange(6)}")
        if roll < 0.55:
            return _random_iri(rng)
        return _random_literal(rng)

    return Graph((subject(), _random_iri(rng), obj()) for _ in range(rng.randint(0, 25)))


@pytest.mark.acceptance(2, "turtle round-trip on randomized graphs")
def test_turtle_round_trip_holds_on_random_graphs():
    started = time.perf_counter()
    rng = random.Random(0xACCE55)
    for _ in range(200):
        graph = _random_graph(rng)
        assert graph_isomorphic(parse_turtle(serialize_turtle(graph)), graph)
    assert time.perf_counter() - started < 10.0


# --- criterion 3: the identity verification matrix, all six cases exact -----------


def _flip_first_hex_digit(hex_text: str) -> str:
    replacement = "0" if hex_text[0] != "0" else "1"
    return replacement + hex_text[1:]


def _profile_with_modulus(bundle, new_hex: str) -> Graph:
    profile = bundle.profile.copy()
    for s, p, o in list(profile.triples(None, CERT.modulus, None)):
        profile.discard((s, p, o))
        profile.add((s, p, Literal(new_hex, XSD.hexBinary)))
    return profile


def _certificate_without_san() -> x509.Certificate:
    key = rsa.generate_private_key(public_exponent=65537, key_size=2048)
    name = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, "sanless")])
    import datetime

    now = datetime.datetime.now(datetime.timezone.utc)
    return (
        x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now)
        .not_valid_after(now + datetime.timedelta(days=1))
        .sign(key, hashes.SHA256())
    )


@pytest.mark.acceptance(3, "identity verification matrix")
def test_identity_verification_matrix_is_exact(student_identity):
    webid = student_identity.webid
    origin = webid.without_fragment().value

    matching = StaticProfileFetcher({origin: student_identity.profile})
    assert verify_webid(student_identity.certificate, matching) == Authenticated(webid)

    tampered = _profile_with_modulus(
        student_identity, _flip_first_hex_digit(student_identity.public_key.modulus_hex)
    )
    result = verify_webid(student_identity.certificate, StaticProfileFetcher({origin: tampered}))
    assert isinstance(result, Denied) and result.reason is DenialReason.KeyMismatch

    result = verify_webid(_certificate_without_san(), matching)
    assert isinstance(result, Denied) and result.reason is DenialReason.NoSan

    result = verify_webid(student_identity.certificate, StaticProfileFetcher({}))
    assert isinstance(result, Denied) and result.reason is DenialReason.ProfileUnreachable

    garbled = StaticProfileFetcher({origin: "this is not turtle [[["})
    result = verify_webid(student_identity.certificate, garbled)
    assert isinstance(result, Denied) and result.reason is DenialReason.ProfileUnparseable

    two_keys = build_profile(webid, RsaPublicKey(0xDEAD, 3), {})
    second = Iri("http://example.org/keys#real")
    two_keys.add((webid, CERT.key, second))
    two_keys.add((second, RDF.type, CERT.RSAPublicKey))
    two_keys.add((second, CERT.modulus, Literal(student_identity.public_key.modulus_hex, XSD.hexBinary)))
    two_keys.add((second, CERT.exponent, Literal("65537", XSD.integer)))
    result = verify_webid(student_identity.certificate, StaticProfileFetcher({origin: two_keys}))
    assert result == Authenticated(webid)


# --- criterion 4: default-deny, grant cycle, indistinguishable denials ------------


def _expected_decision(store: QuadStore, resource: Iri, requester):
    """Ground truth from a raw scan over every quad, independent of check_access."""
    quads = list(store.match(QuadPattern()))
    owning = {q.graph for q in quads if q.subject == resource}
    if requester is None:
        return Deny(DenyReason.Unauthenticated)
    if not owning:
        return Deny(DenyReason.NoSuchResource)
    for graph in owning:
        if any(q.graph == graph and q.predicate == S.webid and q.object == requester for q in quads):
            return Allow(AllowReason.Owner)
    for graph in owning:
        if Quad(graph, resource, S.permission, requester) in quads:
            return Allow(AllowReason.Granted)
    return Deny(DenyReason.NoPermission)


@pytest.mark.acceptance(4, "default-deny access control")
def test_default_deny_with_direct_scan_oracle(tmp_path):
    rng = random.Random(4)
    probes = 0
    for world in range(5):
        store = QuadStore()
        graphs = [Iri(f"http://w{world}-{i}.example.org/graphs/actor") for i in range(4)]
        owners = [Iri(f"http://w{world}-{i}.example.org/profile/actor#id") for i in range(4)]
        resources = [Iri(f"http://w{world}-{i}.example.org/documents/{n}") for i in range(4) for n in range(5)]
        strangers = [Iri("http://stranger.example.org/webid#id"), None]
        for graph, owner in zip(graphs, owners):
            record = Iri(graph.value + "#")
            if rng.random() < 0.85:
                store.insert(Quad(graph, record, S.webid, owner))
            for resource in rng.sample(resources, k=rng.randint(0, 8)):
                store.insert(Quad(graph, resource, RDF.type, CAS.Document))
                if rng.random() < 0.3:
                    store.insert(Quad(graph, resource, S.permission, rng.choice(owners)))
        unknown = Iri(f"http://w{world}.example.org/documents/absent")
        for _ in range(200):
            resource = rng.choice(resources + [unknown])
            requester = rng.choice(owners + strangers)
            assert check_access(store, resource, requester) == _expected_decision(store, resource, requester)
            probes += 1
    assert probes == 1000

    service = make_service(tmp_path, "grantcycle")
    owner, _ = service.create_actor("owner", {})
    record = service.store_document(owner, b"payload", "payload.bin")
    grantee = Iri("http://peer.example.org/webid#id")
    assert service.check_access(record.iri, grantee) == Deny(DenyReason.NoPermission)
    service.grant(owner, record.iri, grantee)
    assert service.check_access(record.iri, grantee) == Allow(AllowReason.Granted)
    service.revoke(owner, record.iri, grantee)
    assert service.check_access(record.iri, grantee) == Deny(DenyReason.NoPermission)


@pytest.mark.acceptance(4, "default-deny access control")
def test_denials_for_absent_and_ungranted_are_byte_identical(tmp_path):
    service = make_service(tmp_path, "denials")
    service.create_actor("owner", {})
    service.create_actor("stranger", {})
    record = service.store_document(service.actor_id("owner"), b"private", "private.txt", "text/plain")
    server = CasHttpServer(service)
    start_in_thread(server)
    try:
        stranger = CasClient(server.url, identity=service.actor_identity("stranger"))
        ungranted = stranger._request("GET", f"/documents/{record.id}")
        absent = stranger._request("GET", f"/documents/{uuid.uuid4()}")
    finally:
        server.shutdown()
        server.server_close()
    assert (ungranted.status_code, absent.status_code) == (404, 404)
    assert ungranted.content == absent.content
    bare = [
        {k: v for k, v in response.headers.items() if k.lower() != "date"}
        for response in (ungranted, absent)
    ]
    assert bare[0] == bare[1]


# --- criterion 5: package export-import round trip on randomized dossiers ---------


def _random_dossier(service: ContentAccessService, actor, rng: random.Random, round_no: int):
    """A package-rooted subtree with documents, a fragment child, and a grant."""
    documents = [
        service.store_document(
            actor,
            rng.randbytes(rng.randint(1, 64 * 1024)),
            f"doc-{round_no}-{index}.bin",
        )
        for index in range(rng.randint(0, 5))
    ]
    dossier = service.dossier_iri(str(uuid.uuid4()))
    fragment = Iri(dossier.value + "#degree")
    quads = [
        Quad(actor.graph_iri, dossier, RDF.type, CAS.Package),
        Quad(actor.graph_iri, dossier, CAS.packageKind, CAS.BachelorDossier),
        Quad(actor.graph_iri, dossier, CAS.degree, fragment),
        Quad(actor.graph_iri, fragment, RDF.type, CAS.Degree),
        Quad(actor.graph_iri, fragment, CAS.degreeTitle, Literal(f"Degree {round_no}")),
        Quad(actor.graph_iri, dossier, S.name, Literal(rng.choice(("Dent", "Muster", "Doe")))),
        Quad(actor.graph_iri, dossier, S.permission, Iri("http://hmsc.example.org/webid#id")),
    ]
    for record in documents:
        quads.append(Quad(actor.graph_iri, dossier, CAS.includesDocument, record.iri))
    service.commit(quads)
    return dossier, documents


@pytest.mark.acceptance(5, "package export-import round trip")
def test_package_round_trip_on_randomized_dossiers(tmp_path):
    started = time.perf_counter()
    rng = random.Random(5)
    source = make_service(tmp_path, "source")
    consumer = make_service(tmp_path, "consumer")
    issuer, _ = source.create_actor("issuer", {})
    collector, _ = consumer.create_actor("collector", {})
    collector_graph = collector.graph_iri
    expected: "set[tuple]" = set()
    originals: "dict[str, bytes]" = {}

    for round_no in range(50):
        dossier, documents = _random_dossier(source, issuer, rng, round_no)
        data = export_package(source.store, dossier, source.config.files_dir)
        assert validate_package(data) == []

        manifest = parse_turtle(
            zipfile.ZipFile(BytesIO(data)).read(MANIFEST_NAME).decode("utf-8")
        )
        assert not list(manifest.triples(None, S.permission, None))

        report = import_package(consumer, collector, data)
        assert report.documents_added == len(documents)

        graph = consumer.store.graph(collector_graph)
        mapping = {
            obj: subj
            for subj, _, obj in graph.triples(None, CAS.importedFrom, None)
            if isinstance(obj, Iri)
        }
        new_dossier = mapping[dossier]

        def remap(term):
            if term in mapping:
                return mapping[term]
            if isinstance(term, Iri) and term.value.startswith(dossier.value + "#"):
                return Iri(new_dossier.value + term.value[len(dossier.value):])
            return term

        for s, p, o in manifest:
            if p == CAS.archivePath:
                continue
            expected.add((remap(s), p, remap(o)))
        expected.add((new_dossier, CAS.importedFrom, dossier))
        for record in documents:
            expected.add((mapping[record.iri], CAS.importedFrom, record.iri))
            originals[record.sha256] = source.document_bytes(record)
            local = consumer.document_record(mapping[record.iri].value.rsplit("/", 1)[-1])
            assert consumer.document_bytes(local) == source.document_bytes(record)
            assert local.sha256 == hashlib.sha256(originals[record.sha256]).hexdigest()

    final = consumer.store.graph(collector_graph)
    collector_record = Iri(collector_graph.value + "#")
    actual = {triple for triple in final if triple[0] != collector_record}
    assert actual == expected
    assert graph_isomorphic(Graph(actual), Graph(expected))

    traversal = BytesIO()
    with zipfile.ZipFile(traversal, "w") as archive:
        archive.writestr(MANIFEST_NAME, "")
        archive.writestr("documents/../evil", b"x")
    assert validate_package(traversal.getvalue()) != []
    with pytest.raises(PackageInvalidError):
        import_package(consumer, collector, traversal.getvalue())
    assert time.perf_counter() - started < 30.0


# --- criterion 6: the full three-service scenario, headless -----------------------


@pytest.mark.acceptance(6, "end-to-end enrollment scenario")
def test_enrollment_scenario_completes_headless(tmp_path, capsys):
    fixtures = configparser.ConfigParser()
    fixtures.read(DEMO_FIXTURES, encoding="utf-8")
    for section in ("bachelor", "student", "master"):
        fixtures[section]["listen"] = f"127.0.0.1:{free_port()}"
    copy = tmp_path / "fixtures.conf"
    with copy.open("w", encoding="utf-8") as sink:
        fixtures.write(sink)

    started = time.perf_counter()
    code = cli_main(["scenario", "run", "--fixtures", str(copy)])
    elapsed = time.perf_counter() - started
    lines = capsys.readouterr().out.splitlines()

    assert code == 0
    assert len(lines) == 10
    assert "denied before grant (404)" in lines[3]
    assert "denied before grant (404)" in lines[7]
    assert lines[-1].endswith("final state DecisionRetrieved")
    assert elapsed < 10.0


# --- criterion 7: exactly eight legal transitions ----------------------------------


@pytest.mark.acceptance(7, "state machine exhaustion")
def test_exactly_eight_transitions_are_legal():
    pairs = [(state, event) for state in EnrollmentState for event in EnrollmentEvent]
    assert len(pairs) == 72
    legal = {}
    for state, event in pairs:
        try:
            legal[(state, event)] = advance(state, event)
        except IllegalTransition:
            pass
    assert len(legal) == 8
    assert legal == {(state, event): target for state, event, target in CHAIN}

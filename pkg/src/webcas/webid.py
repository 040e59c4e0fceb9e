"""WebID identities: keys, self-signed certificates, profiles, verification.

The trust model is profile-backed: a certificate is worth exactly as
much as the profile its SAN URI dereferences to, so verification
compares key material and nothing else. Expiry and chain checks are
deliberately absent here; a transport layer can opt into expiry
enforcement separately.
"""

from __future__ import annotations

import datetime
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Optional, Protocol, Union

import requests
from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import rsa
from cryptography.x509.oid import NameOID

from .rdf import Graph, Iri, IriError, Literal, TurtleParseError, parse_turtle, serialize_turtle
from .rdf.terms import BlankNode
from .vocab import CERT, FOAF, RDF, WELL_KNOWN_PREFIXES, XSD

IDENTITY_FILE = "identity.pem"
PROFILE_FILE = "profile.ttl"

_MAX_PROFILE_BYTES = 1 << 20


class IdentityError(ValueError):
    """Raised for unusable WebIDs and broken identity material."""


class RsaPublicKey(NamedTuple):
    """The compared object of WebID verification."""

    modulus: int
    exponent: int

    @property
    def modulus_hex(self) -> str:
        return modulus_hex(self.modulus)


def modulus_hex(modulus: int) -> str:
    """Canonical form: lowercase hex, whole octets, no leading zero octet."""
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    text = format(modulus, "x")
    if len(text) % 2:
        text = "0" + text
    return text


def parse_modulus(lexical: str) -> int:
    """Parse a cert modulus literal; whitespace and case are insignificant."""
    compact = "".join(lexical.split())
    if not compact:
        raise ValueError("empty modulus")
    return int(compact, 16)


class DenialReason(enum.Enum):
    NoSan = "no-san"
    ProfileUnreachable = "profile-unreachable"
    ProfileUnparseable = "profile-unparseable"
    KeyMismatch = "key-mismatch"
    NoKeyInProfile = "no-key-in-profile"


@dataclass(frozen=True, slots=True)
class Authenticated:
    webid: Iri


@dataclass(frozen=True, slots=True)
class Denied:
    reason: DenialReason
    detail: str = ""


AuthResult = Union[Authenticated, Denied]


@dataclass(frozen=True)
class IdentityBundle:
    """A WebID with everything needed to act as it: key, cert, profile."""

    webid: Iri
    private_key: rsa.RSAPrivateKey
    certificate: x509.Certificate
    profile: Graph

    @property
    def certificate_der(self) -> bytes:
        return self.certificate.public_bytes(serialization.Encoding.DER)

    @property
    def public_key(self) -> RsaPublicKey:
        return public_key_of(self.certificate)


def public_key_of(certificate: x509.Certificate) -> RsaPublicKey:
    key = certificate.public_key()
    if not isinstance(key, rsa.RSAPublicKey):
        raise IdentityError("certificate key is not RSA")
    numbers = key.public_numbers()
    return RsaPublicKey(numbers.n, numbers.e)


def certificate_fingerprint(certificate: x509.Certificate) -> str:
    return certificate.fingerprint(hashes.SHA256()).hex()


def generate_identity(common_name: str, webid: Union[Iri, str], validity_days: int = 365) -> IdentityBundle:
    """Mint a fresh 2048-bit RSA identity: self-signed cert + profile.

    The WebID must be an absolute http(s) IRI with a fragment, so that
    the identifier (the person) stays distinct from the profile document
    it dereferences to.
    """
    webid_iri = Iri(webid) if isinstance(webid, str) else webid
    if webid_iri.scheme not in ("http", "https"):
        raise IdentityError(f"WebID must be http(s): {webid_iri}")
    if webid_iri.fragment is None:
        raise IdentityError(f"WebID needs a fragment (e.g. #id): {webid_iri}")
    if validity_days < 1:
        raise IdentityError("validity must be at least one day")

    private_key = rsa.generate_private_key(public_exponent=65537, key_size=2048)
    name = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, common_name)])
    now = datetime.datetime.now(datetime.timezone.utc)
    certificate = (
        x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(private_key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - datetime.timedelta(minutes=5))
        .not_valid_after(now + datetime.timedelta(days=validity_days))
        .add_extension(
            x509.SubjectAlternativeName([x509.UniformResourceIdentifier(webid_iri.value)]),
            critical=False,
        )
        .sign(private_key, hashes.SHA256())
    )
    numbers = private_key.public_key().public_numbers()
    profile = build_profile(
        webid_iri,
        RsaPublicKey(numbers.n, numbers.e),
        {FOAF.name: Literal(common_name)},
    )
    return IdentityBundle(webid_iri, private_key, certificate, profile)


def build_profile(webid: Iri, key: RsaPublicKey, attributes: Mapping[Iri, Literal]) -> Graph:
    """The FOAF profile document that backs a WebID.

    Yields the person typing, the given attribute literals, and one
    cert-ontology key block: with no attributes that is exactly five
    triples.
    """
    g = Graph()
    g.add((webid, RDF.type, FOAF.Person))
    for attribute, value in attributes.items():
        g.add((webid, attribute, value))
    key_node = BlankNode("key")
    g.add((webid, CERT.key, key_node))
    g.add((key_node, RDF.type, CERT.RSAPublicKey))
    g.add((key_node, CERT.modulus, Literal(key.modulus_hex, XSD.hexBinary)))
    g.add((key_node, CERT.exponent, Literal(str(key.exponent), XSD.integer)))
    return g


def extract_san_uris(certificate: x509.Certificate) -> "list[Iri]":
    """URI-type SAN entries, in certificate order; other types ignored."""
    try:
        ext = certificate.extensions.get_extension_for_class(x509.SubjectAlternativeName)
    except x509.ExtensionNotFound:
        return []
    uris: "list[Iri]" = []
    for value in ext.value.get_values_for_type(x509.UniformResourceIdentifier):
        try:
            uris.append(Iri(value))
        except IriError:
            continue
    return uris


def keys_in_profile(profile: Graph, webid: Iri) -> "tuple[list[RsaPublicKey], list[str]]":
    """All well-formed keys attached to webid, plus diagnostics for the rest."""
    keys: "list[RsaPublicKey]" = []
    problems: "list[str]" = []
    for _, _, key_node in sorted(profile.triples(webid, CERT.key, None), key=lambda t: str(t[2])):
        if isinstance(key_node, Literal):
            problems.append("cert key must be a node, not a literal")
            continue
        modulus_term = profile.value(key_node, CERT.modulus)
        exponent_term = profile.value(key_node, CERT.exponent)
        if not isinstance(modulus_term, Literal):
            problems.append(f"key {key_node} has no modulus literal")
            continue
        if not isinstance(exponent_term, Literal):
            problems.append(f"key {key_node} has no exponent literal")
            continue
        try:
            modulus = parse_modulus(modulus_term.lexical)
        except ValueError:
            problems.append(f"key {key_node} has a non-hexadecimal modulus")
            continue
        try:
            exponent = int(exponent_term.lexical.strip())
        except ValueError:
            problems.append(f"key {key_node} has a non-integer exponent")
            continue
        keys.append(RsaPublicKey(modulus, exponent))
    return keys, problems


# --- Profile retrieval ------------------------------------------------------


class ProfileError(Exception):
    pass


class ProfileUnreachableError(ProfileError):
    pass


class ProfileUnparseableError(ProfileError):
    pass


class ProfileFetcher(Protocol):
    def fetch(self, iri: Iri) -> "tuple[str, bytes]":
        """Dereference a document IRI to (media type, body bytes)."""
        ...


class HttpProfileFetcher:
    """Dereferences profile documents over the network."""

    def __init__(
        self,
        timeout: float = 10.0,
        session: Optional[requests.Session] = None,
        verify_tls: Union[bool, str] = True,
    ) -> None:
        self._timeout = timeout
        self._session = session or requests.Session()
        self._verify_tls = verify_tls

    def fetch(self, iri: Iri) -> "tuple[str, bytes]":
        try:
            response = self._session.get(
                iri.value,
                headers={"Accept": "text/turtle"},
                timeout=self._timeout,
                verify=self._verify_tls,
            )
        except requests.RequestException as exc:
            raise ProfileUnreachableError(f"profile fetch failed: {exc}") from exc
        if response.status_code != 200:
            raise ProfileUnreachableError(f"profile fetch returned status {response.status_code}")
        if len(response.content) > _MAX_PROFILE_BYTES:
            raise ProfileUnparseableError("profile document exceeds the size limit")
        return response.headers.get("Content-Type", "text/turtle"), response.content


class StaticProfileFetcher:
    """Serves profiles from memory; documents keyed by their IRI."""

    def __init__(self, documents: Mapping[str, Union[str, bytes, Graph]]) -> None:
        self._documents = dict(documents)

    def fetch(self, iri: Iri) -> "tuple[str, bytes]":
        body = self._documents.get(iri.value)
        if body is None:
            raise ProfileUnreachableError(f"no document at {iri}")
        if isinstance(body, Graph):
            body = serialize_turtle(body, WELL_KNOWN_PREFIXES)
        if isinstance(body, str):
            body = body.encode("utf-8")
        return "text/turtle", body


class RecordingFetcher:
    """Wraps a fetcher and records every dereferenced IRI."""

    def __init__(self, inner: Optional[ProfileFetcher] = None) -> None:
        self._inner = inner
        self.requests: "list[Iri]" = []

    def fetch(self, iri: Iri) -> "tuple[str, bytes]":
        self.requests.append(iri)
        if self._inner is None:
            raise ProfileUnreachableError(f"no document at {iri}")
        return self._inner.fetch(iri)


def fetch_profile(fetcher: ProfileFetcher, webid: Iri) -> Graph:
    """Dereference a WebID's profile document and parse it.

    The fragment is stripped before the request; non-http(s) schemes are
    refused outright, with no request issued.
    """
    if webid.scheme not in ("http", "https"):
        raise ProfileUnreachableError(f"refusing to dereference {webid.scheme!r} IRI {webid}")
    document = webid.without_fragment()
    _, body = fetcher.fetch(document)
    try:
        text = body.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProfileUnparseableError(f"profile at {document} is not UTF-8: {exc}") from exc
    try:
        return parse_turtle(text, base=document)
    except TurtleParseError as exc:
        raise ProfileUnparseableError(f"profile at {document} is not valid Turtle: {exc}") from exc


def verify_webid(certificate: x509.Certificate, fetcher: ProfileFetcher) -> AuthResult:
    """The WebID handshake check: does any SAN URI's profile vouch for this key?

    Tries SAN URIs in certificate order; the first whose profile lists
    the certificate's exact (modulus, exponent) wins. When everything
    fails, the reason reported is the last failure's.
    """
    san_uris = extract_san_uris(certificate)
    if not san_uris:
        return Denied(DenialReason.NoSan, "certificate carries no URI subject alternative name")

    key = certificate.public_key()
    presented: Optional[RsaPublicKey] = None
    if isinstance(key, rsa.RSAPublicKey):
        numbers = key.public_numbers()
        presented = RsaPublicKey(numbers.n, numbers.e)

    reason = DenialReason.ProfileUnreachable
    detail = ""
    for webid in san_uris:
        try:
            profile = fetch_profile(fetcher, webid)
        except ProfileUnparseableError as exc:
            reason, detail = DenialReason.ProfileUnparseable, str(exc)
            continue
        except ProfileUnreachableError as exc:
            reason, detail = DenialReason.ProfileUnreachable, str(exc)
            continue
        keys, problems = keys_in_profile(profile, webid)
        if not keys:
            reason = DenialReason.NoKeyInProfile
            detail = problems[0] if problems else f"profile lists no key for {webid}"
            continue
        if presented is not None and presented in keys:
            return Authenticated(webid)
        reason, detail = DenialReason.KeyMismatch, "no profile key matches the certificate key"
    return Denied(reason, detail)


# --- On-disk form -----------------------------------------------------------


def save_identity(bundle: IdentityBundle, directory: Union[str, Path]) -> Path:
    """Write identity.pem (private key + certificate) and profile.ttl."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pem_path = directory / IDENTITY_FILE
    key_pem = bundle.private_key.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )
    cert_pem = bundle.certificate.public_bytes(serialization.Encoding.PEM)
    pem_path.write_bytes(key_pem + cert_pem)
    pem_path.chmod(0o600)
    (directory / PROFILE_FILE).write_text(
        serialize_turtle(bundle.profile, WELL_KNOWN_PREFIXES), encoding="utf-8"
    )
    return pem_path


def load_identity(directory: Union[str, Path]) -> IdentityBundle:
    """Read back what save_identity wrote."""
    directory = Path(directory)
    pem_path = directory / IDENTITY_FILE
    if not pem_path.exists():
        raise IdentityError(f"no identity at {pem_path}")
    pem_data = pem_path.read_bytes()
    try:
        private_key = serialization.load_pem_private_key(pem_data, password=None)
        certificate = x509.load_pem_x509_certificate(pem_data)
    except ValueError as exc:
        raise IdentityError(f"unreadable identity material in {pem_path}: {exc}") from exc
    if not isinstance(private_key, rsa.RSAPrivateKey):
        raise IdentityError("identity private key is not RSA")
    san_uris = extract_san_uris(certificate)
    if not san_uris:
        raise IdentityError("identity certificate carries no WebID SAN URI")
    webid = san_uris[0]
    profile_path = directory / PROFILE_FILE
    if profile_path.exists():
        profile = parse_turtle(profile_path.read_text(encoding="utf-8"), base=webid.without_fragment())
    else:
        profile = build_profile(webid, public_key_of(certificate), {})
    return IdentityBundle(webid, private_key, certificate, profile)

"""INI-style configuration files for services and scenario fixtures.

Relative paths inside a file resolve against the file's own directory,
so a checkout can carry runnable configurations.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .rdf import Iri
from .service import ServiceConfig, ValidationError
from .vocab import S, WELL_KNOWN_PREFIXES
from .workflow import DecisionOutcome

_ROLE_RESERVED = {
    "slug",
    "listen",
    "data_dir",
    "degree_title",
    "degree_awarded_on",
    "document_filename",
    "document_media_type",
}


class ConfigError(ValidationError):
    pass


def _parse_listen(value: str) -> "tuple[str, int]":
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"listen must be host:port, got {value!r}")
    return host, int(port)


def _resolve_path(raw: str, anchor: Path) -> Path:
    path = Path(raw).expanduser()
    return path if path.is_absolute() else (anchor / path).resolve()


def load_service_config(path: "Path | str") -> ServiceConfig:
    """Read a [service] section into a ServiceConfig."""
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read configuration file {path}")
    if "service" not in parser:
        raise ConfigError(f"{path} has no [service] section")
    section = parser["service"]
    anchor = path.parent.resolve()
    try:
        base_iri = Iri(section["base_iri"])
        data_dir = _resolve_path(section["data_dir"], anchor)
        host, port = _parse_listen(section.get("listen", "127.0.0.1:8440"))
    except KeyError as missing:
        raise ConfigError(f"{path} [service] is missing {missing}") from None

    def optional_path(key: str) -> Optional[Path]:
        raw = section.get(key)
        return _resolve_path(raw, anchor) if raw else None

    return ServiceConfig(
        base_iri=base_iri,
        data_dir=data_dir,
        listen_host=host,
        listen_port=port,
        tls_cert=optional_path("tls_cert"),
        tls_key=optional_path("tls_key"),
        client_ca=optional_path("client_ca"),
        enforce_cert_expiry=section.getboolean("enforce_cert_expiry", fallback=False),
        static_dir=optional_path("static_dir"),
    )


def resolve_predicate(token: str) -> Iri:
    """A predicate written either absolute or with a well-known prefix."""
    token = token.strip().strip("<>")
    prefix, _, local = token.partition(":")
    if prefix in WELL_KNOWN_PREFIXES and not token.startswith(("http://", "https://")):
        return Iri(WELL_KNOWN_PREFIXES[prefix] + local)
    return Iri(token)


@dataclass(frozen=True)
class RoleFixture:
    """One actor-plus-service in a scenario fixture file."""

    role: str
    slug: str
    listen_host: str
    listen_port: int
    data_dir: Path
    attributes: "dict[str, str]" = field(default_factory=dict)

    @property
    def base_iri(self) -> Iri:
        return Iri(f"http://{self.listen_host}:{self.listen_port}")

    def service_config(self) -> ServiceConfig:
        return ServiceConfig(
            base_iri=self.base_iri,
            data_dir=self.data_dir,
            listen_host=self.listen_host,
            listen_port=self.listen_port,
        )


@dataclass(frozen=True)
class ScenarioFixtures:
    bachelor: RoleFixture
    student: RoleFixture
    master: RoleFixture
    outcome: DecisionOutcome
    comment: str
    selection_documents: "list[str]"
    statement_filter: "list[Iri]"
    master_webid: Optional[Iri]  # None means: whatever the master actor's identity says
    degree_title: str
    degree_awarded_on: str
    document_filename: str
    document_media_type: str


_DEFAULT_FILTER = "s:name s:vorname s:email s:matrikelnummer"


def load_scenario_fixtures(path: "Path | str") -> ScenarioFixtures:
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read fixtures file {path}")
    for name in ("scenario", "bachelor", "student", "master"):
        if name not in parser:
            raise ConfigError(f"{path} has no [{name}] section")
    anchor = path.parent.resolve()

    def role(name: str) -> RoleFixture:
        section = parser[name]
        try:
            host, port = _parse_listen(section["listen"])
            return RoleFixture(
                role=name,
                slug=section["slug"],
                listen_host=host,
                listen_port=port,
                data_dir=_resolve_path(section.get("data_dir", f"scenario-data/{name}"), anchor),
                attributes={k: v for k, v in section.items() if k not in _ROLE_RESERVED},
            )
        except KeyError as missing:
            raise ConfigError(f"{path} [{name}] is missing {missing}") from None

    scenario = parser["scenario"]
    outcome_text = scenario.get("outcome", "accepted").strip().lower()
    if outcome_text not in ("accepted", "rejected"):
        raise ConfigError(f"outcome must be accepted or rejected, got {outcome_text!r}")
    raw_webid = scenario.get("master_webid", "auto").strip()
    bachelor = role("bachelor")
    selection = [
        name.strip()
        for name in scenario.get("selection_documents", "").split(",")
        if name.strip()
    ]
    document_filename = parser["bachelor"].get("document_filename", "transcript.pdf")
    return ScenarioFixtures(
        bachelor=bachelor,
        student=role("student"),
        master=role("master"),
        outcome=DecisionOutcome.Accepted if outcome_text == "accepted" else DecisionOutcome.Rejected,
        comment=scenario.get("comment", "Decision recorded"),
        selection_documents=selection or [document_filename],
        statement_filter=[
            resolve_predicate(token)
            for token in scenario.get("statement_filter", _DEFAULT_FILTER).replace(",", " ").split()
        ],
        master_webid=None if raw_webid in ("", "auto") else Iri(raw_webid),
        degree_title=parser["bachelor"].get("degree_title", "Bachelor of Science"),
        degree_awarded_on=parser["bachelor"].get("degree_awarded_on", "2014-07-01"),
        document_filename=document_filename,
        document_media_type=parser["bachelor"].get("document_media_type", "application/pdf"),
    )


def student_attribute_iri(key: str) -> Iri:
    return Iri(S.base + key)

"""HTTP client for talking to a content access service as one actor.

All cross-domain traffic in the system flows through this client: the
actor downloads packages from a remote service and imports them into
its own. The identity travels as a TLS client certificate on https
URLs and as the loopback test-mode certificate header on http URLs.
"""

from __future__ import annotations

import base64
from pathlib import Path
from typing import Optional, Union

import requests

from .httpd import CERT_HEADER
from .rdf import Iri
from .webid import IDENTITY_FILE, IdentityBundle, load_identity


class CasClient:
    def __init__(
        self,
        base_url: str,
        identity: "Union[IdentityBundle, Path, str, None]" = None,
        verify: "Union[bool, str]" = True,
        timeout: float = 15.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.verify = verify
        self._plain = self.base_url.startswith("http://")
        self._bundle: Optional[IdentityBundle] = None
        self._identity_file: Optional[Path] = None
        if isinstance(identity, IdentityBundle):
            self._bundle = identity
        elif identity is not None:
            directory = Path(identity)
            self._identity_file = directory / IDENTITY_FILE if directory.is_dir() else directory
            if self._plain:
                self._bundle = load_identity(self._identity_file.parent)
        self._session = requests.Session()

    def _request(self, method: str, path: str, **kwargs) -> requests.Response:
        headers = dict(kwargs.pop("headers", {}))
        if self._plain:
            if self._bundle is not None:
                headers[CERT_HEADER] = base64.b64encode(self._bundle.certificate_der).decode("ascii")
        else:
            if self._identity_file is not None:
                kwargs.setdefault("cert", str(self._identity_file))
            kwargs.setdefault("verify", self.verify)
        return self._session.request(
            method, f"{self.base_url}{path}", headers=headers, timeout=self.timeout, **kwargs
        )

    # -- reads --

    def get_profile(self, slug: str) -> "tuple[int, str]":
        response = self._request("GET", f"/profile/{slug}")
        return response.status_code, response.text

    def get_graph(self, slug: str) -> "tuple[int, str]":
        response = self._request("GET", f"/graphs/{slug}")
        return response.status_code, response.text

    def get_document(self, document_id: str) -> "tuple[int, bytes, str]":
        response = self._request("GET", f"/documents/{document_id}")
        return response.status_code, response.content, response.headers.get("Content-Type", "")

    def get_package(self, dossier_id: str) -> "tuple[int, bytes]":
        response = self._request("GET", f"/package/{dossier_id}")
        return response.status_code, response.content

    def session(self) -> "tuple[int, dict]":
        response = self._request("GET", "/session")
        return response.status_code, _json_or_text(response)

    # -- writes --

    def upload_document(
        self, slug: str, filename: str, data: bytes, media_type: str = "application/octet-stream"
    ) -> "tuple[int, dict]":
        response = self._request(
            "POST",
            f"/actors/{slug}/documents",
            files={"file": (filename, data, media_type)},
        )
        return response.status_code, _json_or_text(response)

    def grant(self, slug: str, resource: Iri, grantee: Iri) -> "tuple[int, dict]":
        response = self._request(
            "POST", f"/actors/{slug}/grants", data=_grant_body(resource, grantee),
            headers={"Content-Type": "text/turtle; charset=utf-8"},
        )
        return response.status_code, _json_or_text(response)

    def revoke(self, slug: str, resource: Iri, grantee: Iri) -> "tuple[int, dict]":
        response = self._request(
            "DELETE", f"/actors/{slug}/grants", data=_grant_body(resource, grantee),
            headers={"Content-Type": "text/turtle; charset=utf-8"},
        )
        return response.status_code, _json_or_text(response)

    def import_package(self, slug: str, data: bytes) -> "tuple[int, dict]":
        response = self._request(
            "POST",
            f"/actors/{slug}/import",
            data=data,
            headers={"Content-Type": "application/zip"},
        )
        return response.status_code, _json_or_text(response)

    def compose(self, slug: str, documents: "list[str]", statements: "list[str]") -> "tuple[int, dict]":
        response = self._request(
            "POST", f"/actors/{slug}/compose", json={"documents": documents, "statements": statements}
        )
        return response.status_code, _json_or_text(response)

    def decide(self, slug: str, application: str, outcome: str, comment: str) -> "tuple[int, dict]":
        response = self._request(
            "POST",
            f"/actors/{slug}/decide",
            json={"application": application, "outcome": outcome, "comment": comment},
        )
        return response.status_code, _json_or_text(response)

    def delete_document(self, document_id: str) -> "tuple[int, dict]":
        response = self._request("DELETE", f"/documents/{document_id}")
        return response.status_code, _json_or_text(response)


def _grant_body(resource: Iri, grantee: Iri) -> bytes:
    statement = f"<{resource.value}> <http://persemid.bfh.ch/vocab/student#permission> <{grantee.value}> .\n"
    return statement.encode("utf-8")


def _json_or_text(response: requests.Response) -> dict:
    try:
        return response.json()
    except ValueError:
        return {"error": response.text}

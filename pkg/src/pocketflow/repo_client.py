"""Client for the workflow repository wire protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import requests

from pocketflow.errors import DecodeError, NotFound, ProtocolError
from pocketflow.model import WorkflowFormat, WorkflowMetadata, WorkflowRef
from pocketflow.transport import Transport, json_of


@dataclass(frozen=True)
class SearchPage:
    total: int
    page: int
    per_page: int
    items: tuple[WorkflowMetadata, ...]


def _excerpt(response: requests.Response, limit: int = 200) -> str:
    return response.text[:limit]


class RepoClient:
    """Searches and fetches workflow versions from one repository base URI.

    Diagram and definition URIs are derived from the base and the (id,
    version) pair; the wire metadata carries only scalar fields.
    """

    def __init__(self, base: str, transport: Transport | None = None) -> None:
        self.base = base.rstrip("/")
        self.transport = transport or Transport()

    # -- uri helpers --

    def _version_uri(self, workflow_id: str, version: int) -> str:
        return f"{self.base}/workflows/{workflow_id}/versions/{version}"

    def _metadata_from_obj(self, obj: Mapping[str, Any]) -> WorkflowMetadata:
        try:
            ref = WorkflowRef(str(obj["id"]), int(obj["version"]), self.base)
            base = self._version_uri(ref.repository_id, ref.version)
            return WorkflowMetadata(
                ref=ref,
                title=str(obj["title"]),
                uploader=str(obj.get("uploader", "")),
                description=str(obj.get("description", "")),
                rating=float(obj.get("rating", 0.0)),
                diagram_uri=f"{base}/diagram",
                definition_uri=f"{base}/definition",
                license=str(obj.get("license", "")),
                format_tag=WorkflowFormat(obj.get("format", "opaque")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"bad workflow metadata: {exc}") from exc

    # -- operations --

    def search(self, query: str = "", page: int = 1, per_page: int = 20) -> SearchPage:
        """Token-AND search over titles and descriptions, newest versions only."""
        if page < 1:
            raise ValueError("page must be >= 1")
        if not 1 <= per_page <= 100:
            raise ValueError("per_page must be within [1, 100]")
        response = self.transport.get(
            f"{self.base}/workflows"
            f"?query={requests.utils.quote(query)}&page={page}&per_page={per_page}"
        )
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        obj = json_of(response)
        try:
            items = tuple(self._metadata_from_obj(entry) for entry in obj["items"])
            return SearchPage(
                total=int(obj["total"]),
                page=int(obj["page"]),
                per_page=int(obj["per_page"]),
                items=items,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"bad search page: {exc}") from exc

    def fetch_metadata(self, workflow_id: str, version: int) -> WorkflowMetadata:
        response = self.transport.get(self._version_uri(workflow_id, version))
        if response.status_code == 404:
            raise NotFound(f"workflow {workflow_id}@{version}")
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return self._metadata_from_obj(json_of(response))

    def fetch_diagram(self, workflow_id: str, version: int) -> tuple[bytes, str]:
        """Diagram bytes and their media type."""
        response = self.transport.get(self._version_uri(workflow_id, version) + "/diagram")
        if response.status_code == 404:
            raise NotFound(f"diagram of {workflow_id}@{version}")
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return response.content, response.headers.get("Content-Type", "application/octet-stream")

    def fetch_definition(self, workflow_id: str, version: int) -> tuple[bytes, str]:
        """Definition bytes and the format tag from the X-Format header."""
        response = self.transport.get(self._version_uri(workflow_id, version) + "/definition")
        if response.status_code == 404:
            raise NotFound(f"definition of {workflow_id}@{version}")
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return response.content, response.headers.get("X-Format", "opaque")

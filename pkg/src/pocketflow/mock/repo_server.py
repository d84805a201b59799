"""Mock workflow repository speaking the repository wire protocol.

Routes:

    GET /workflows?query=&page=&per_page=     search newest versions
    GET /workflows/{id}/versions/{v}          metadata
    GET /workflows/{id}/versions/{v}/diagram  rendered diagram bytes
    GET /workflows/{id}/versions/{v}/definition  definition bytes,
        format tag in the X-Format response header
"""

from __future__ import annotations

from pocketflow.httpd import ApiService, FaultPolicy, HttpError, Request, Response, json_response
from pocketflow.mock.fixtures import FixtureSet, WorkflowFixture, search_fixtures, standard_fixtures


class MockRepoServer(ApiService):
    def __init__(self, fixtures: FixtureSet | None = None, host: str = "127.0.0.1",
                 port: int = 0, fault_policy: FaultPolicy | None = None) -> None:
        super().__init__(host=host, port=port, fault_policy=fault_policy)
        self.fixtures = fixtures if fixtures is not None else standard_fixtures()
        self.add_route("GET", r"/workflows", self._search)
        self.add_route("GET", r"/workflows/(?P<id>[^/]+)/versions/(?P<version>[^/]+)", self._metadata)
        self.add_route(
            "GET", r"/workflows/(?P<id>[^/]+)/versions/(?P<version>[^/]+)/diagram", self._diagram
        )
        self.add_route(
            "GET", r"/workflows/(?P<id>[^/]+)/versions/(?P<version>[^/]+)/definition", self._definition
        )

    # -- handlers --

    def _search(self, request: Request) -> Response:
        query = request.query_one("query", "") or ""
        try:
            page = int(request.query_one("page", "1"))
            per_page = int(request.query_one("per_page", "20"))
        except ValueError:
            raise HttpError(400, {"error": "page and per_page must be integers"}) from None
        try:
            total, items = search_fixtures(self.fixtures, query, page, per_page)
        except ValueError as err:
            raise HttpError(400, {"error": str(err)}) from None
        return json_response({
            "total": total,
            "page": page,
            "per_page": per_page,
            "items": [f.summary_obj() for f in items],
        })

    def _fixture(self, request: Request) -> WorkflowFixture:
        workflow_id = request.params["id"]
        try:
            version = int(request.params["version"])
        except ValueError:
            raise HttpError(404, {"error": "no such workflow version"}) from None
        fixture = self.fixtures.get(workflow_id, version)
        if fixture is None:
            raise HttpError(404, {"error": "no such workflow version"})
        return fixture

    def _metadata(self, request: Request) -> Response:
        return json_response(self._fixture(request).summary_obj())

    def _diagram(self, request: Request) -> Response:
        fixture = self._fixture(request)
        return Response(body=fixture.diagram, content_type=fixture.diagram_media)

    def _definition(self, request: Request) -> Response:
        fixture = self._fixture(request)
        content_type = (
            "application/json; charset=utf-8"
            if fixture.format_tag == "flowlite"
            else "application/octet-stream"
        )
        return Response(
            body=fixture.definition,
            content_type=content_type,
            headers=(("X-Format", fixture.format_tag),),
        )

"""HTTP gateway between the web UI and everything else.

Serves a JSON API under /api that proxies the repository and execution
services, merges in local favourites and history, launches runs, and
streams digest-verified output files. The single-page UI is served from
a static directory at /, with a small built-in placeholder page when no
UI bundle is available.

The API is deliberately browser-shaped: one origin, JSON everywhere,
errors as {"error": ...} with meaningful status codes mirroring the
upstream protocols (404 unknown, 409 precondition, 410 expired).
"""

from __future__ import annotations

import base64
import json
import mimetypes
import os
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import flowlite, store
from .config import Config
from .errors import (
    DecodeError,
    DigestMismatch,
    Gone,
    IllegalState,
    NotFinished,
    NotFound,
    NotReady,
    ProtocolError,
    Rejected,
    TransportError,
)
from .exec_client import ExecClient
from .httpd import ApiService, HttpError, Request, Response, json_response, split_bind
from .model import InputBinding, RunDescriptor, WorkflowRef
from .repo_client import RepoClient
from .store import Favourite, RunRecord, StoredBinding
from .transport import Transport

_PLACEHOLDER_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>pocketflow</title></head>
<body style="font-family: system-ui; max-width: 40rem; margin: 3rem auto">
<h1>pocketflow gateway</h1>
<p>The API is up at <code>/api</code>. No UI bundle was found; build the
frontend and point POCKETFLOW_UI at its dist directory.</p>
</body></html>
"""

POLL_MS = 500


def _b64_field(obj: Any, key: str) -> bytes:
    try:
        return base64.b64decode(obj[key], validate=True)
    except (KeyError, TypeError, ValueError):
        raise HttpError(400, {"error": f"{key} must be base64 text"}) from None


class Gateway(ApiService):
    """One process tying the clients, the store, and the UI together."""

    def __init__(
        self,
        config: Config,
        bind: str = "127.0.0.1:0",
        static_dir: Path | None = None,
        transport: Transport | None = None,
    ) -> None:
        host, port = split_bind(bind)
        super().__init__(host, port)
        self.config = config
        self.transport = transport or Transport()
        self.repo = RepoClient(config.repo_base, self.transport)
        self.execs = ExecClient(config.exec_base, self.transport)
        self.static_dir = static_dir if static_dir and static_dir.is_dir() else None

        self.add_route("GET", r"/api/health", self._health)
        self.add_route("GET", r"/api/config", self._config)
        self.add_route("GET", r"/api/workflows", self._workflows)
        self.add_route("GET", r"/api/workflows/(?P<id>[^/]+)/(?P<v>\d+)", self._workflow)
        self.add_route(
            "GET", r"/api/workflows/(?P<id>[^/]+)/(?P<v>\d+)/diagram", self._diagram
        )
        self.add_route(
            "GET", r"/api/workflows/(?P<id>[^/]+)/(?P<v>\d+)/interface", self._interface
        )
        self.add_route("POST", r"/api/favourites", self._fav_add)
        self.add_route(
            "DELETE", r"/api/favourites/(?P<id>[^/]+)/(?P<v>\d+)", self._fav_remove
        )
        self.add_route("GET", r"/api/history", self._history)
        self.add_route("POST", r"/api/runs", self._launch)
        self.add_route("GET", r"/api/runs/(?P<id>[^/]+)", self._run_status)
        self.add_route("GET", r"/api/runs/(?P<id>[^/]+)/outputs", self._run_outputs)
        self.add_route(
            "GET", r"/api/runs/(?P<id>[^/]+)/outputs/(?P<port>[^/]+)", self._output_file
        )
        self.add_route("GET", r"/(?P<path>.*)", self._static)

    # -- plumbing ---------------------------------------------------------

    @property
    def root(self) -> Path:
        return self.config.data_root

    def _proxied(self, call):
        """Run a client call, translating its failures to HTTP statuses."""
        try:
            return call()
        except NotFound as exc:
            raise HttpError(404, {"error": str(exc)}) from exc
        except Gone as exc:
            obj: dict[str, Any] = {"error": "run expired"}
            if exc.descriptor is not None:
                obj["run"] = exc.descriptor.to_json_obj()
            raise HttpError(410, obj) from exc
        except NotReady as exc:
            raise HttpError(409, {"error": "not ready", "missing": list(exc.missing)}) from exc
        except (NotFinished, IllegalState) as exc:
            raise HttpError(409, {"error": str(exc)}) from exc
        except Rejected as exc:
            raise HttpError(422, {"error": str(exc)}) from exc
        except DigestMismatch as exc:
            raise HttpError(502, {"error": f"output failed verification: {exc}"}) from exc
        except (TransportError, ProtocolError, DecodeError) as exc:
            raise HttpError(502, {"error": f"upstream failure: {exc}"}) from exc

    def _ref_of(self, request: Request) -> WorkflowRef:
        return WorkflowRef(
            request.params["id"], int(request.params["v"]), self.config.repo_base
        )

    # -- health and config --------------------------------------------------

    def _health(self, request: Request) -> Response:
        return json_response({"ok": True})

    def _config(self, request: Request) -> Response:
        return json_response(
            {
                "repo_base": self.config.repo_base,
                "exec_base": self.config.exec_base,
                "poll_ms": POLL_MS,
            }
        )

    # -- workflows ----------------------------------------------------------

    def _workflows(self, request: Request) -> Response:
        query = request.query_one("query", "")
        try:
            page = int(request.query_one("page", "1"))
            per_page = int(request.query_one("per_page", "20"))
        except ValueError:
            raise HttpError(400, {"error": "page and per_page must be integers"}) from None
        try:
            result = self._proxied(lambda: self.repo.search(query, page=page, per_page=per_page))
        except ValueError as exc:
            raise HttpError(400, {"error": str(exc)}) from exc
        favs = {
            (f.ref.repository_id, f.ref.version) for f in store.list_favourites(self.root)
        }
        items = []
        for meta in result.items:
            obj = meta.to_json_obj()
            obj["favourite"] = (meta.ref.repository_id, meta.ref.version) in favs
            items.append(obj)
        return json_response(
            {
                "total": result.total,
                "page": result.page,
                "per_page": result.per_page,
                "items": items,
            }
        )

    def _workflow(self, request: Request) -> Response:
        ref = self._ref_of(request)
        meta = self._proxied(lambda: self.repo.fetch_metadata(ref.repository_id, ref.version))
        obj = meta.to_json_obj()
        obj["favourite"] = store.is_favourite(self.root, ref)
        return json_response(obj)

    def _diagram(self, request: Request) -> Response:
        ref = self._ref_of(request)
        data, content_type = self._proxied(
            lambda: self.repo.fetch_diagram(ref.repository_id, ref.version)
        )
        return Response(body=data, content_type=content_type)

    def _interface(self, request: Request) -> Response:
        ref = self._ref_of(request)
        data, format_tag = self._proxied(
            lambda: self.repo.fetch_definition(ref.repository_id, ref.version)
        )
        if format_tag != "flowlite":
            raise HttpError(422, {"error": f"{format_tag} definitions are opaque"})
        graph = flowlite.parse(data)
        inputs, outputs = flowlite.interface(graph)
        return json_response(
            {
                "inputs": [
                    {
                        "name": p.name,
                        "depth": p.depth,
                        "description": p.description,
                        "required": p.required,
                    }
                    for p in inputs
                ],
                "outputs": [{"name": p.name, "depth": p.depth} for p in outputs],
            }
        )

    # -- favourites -----------------------------------------------------------

    def _fav_add(self, request: Request) -> Response:
        obj = request.json()
        if not isinstance(obj, dict) or "id" not in obj or "version" not in obj:
            raise HttpError(400, {"error": "expected {id, version}"})
        try:
            version = int(obj["version"])
        except (TypeError, ValueError):
            raise HttpError(400, {"error": "version must be an integer"}) from None
        meta = self._proxied(lambda: self.repo.fetch_metadata(str(obj["id"]), version))
        fav = Favourite.of(meta, marked_at=datetime.now(tz=timezone.utc))
        store.save_favourite(self.root, fav)
        return json_response({"favourite": fav.to_json_obj()}, status=201)

    def _fav_remove(self, request: Request) -> Response:
        removed = store.remove_favourite(self.root, self._ref_of(request))
        return json_response({"removed": removed})

    # -- history and runs -------------------------------------------------------

    def _history(self, request: Request) -> Response:
        records = store.list_history(self.root)
        return json_response({"runs": [r.to_json_obj() for r in records]})

    def _run_status(self, request: Request) -> Response:
        descriptor = self._proxied(lambda: self.execs.poll_status(request.params["id"]))
        self._refresh(descriptor)
        return json_response({"run": descriptor.to_json_obj()})

    def _refresh(self, descriptor: RunDescriptor) -> None:
        try:
            record = store.load_record(self.root, descriptor.run_id)
        except (NotFound, ValueError):
            return
        updated = record.with_descriptor(descriptor)
        if updated != record:
            store.save_record(self.root, updated)

    def _run_outputs(self, request: Request) -> Response:
        manifest = self._proxied(lambda: self.execs.fetch_outputs(request.params["id"]))
        return json_response(manifest.to_json_obj())

    def _output_file(self, request: Request) -> Response:
        run_id, port = request.params["id"], request.params["port"]
        manifest = self._proxied(lambda: self.execs.fetch_outputs(run_id))
        entry = manifest.entry(port)
        if entry is None:
            raise HttpError(404, {"error": f"no such output: {port}"})
        data, artifact = self._proxied(
            lambda: self.execs.fetch_output_bytes(run_id, port, manifest)
        )
        local = store.save_output(self.root, run_id, port, data)
        self._note_output_path(run_id, port, local)
        return Response(
            body=data,
            content_type=artifact.media_type,
            headers=(
                ("X-Depth", str(artifact.depth)),
                ("Content-Disposition", f'attachment; filename="{port}.txt"'),
            ),
        )

    def _note_output_path(self, run_id: str, port: str, path: Path) -> None:
        try:
            record = store.load_record(self.root, run_id)
        except (NotFound, ValueError):
            return
        paths = dict(record.output_paths)
        paths[port] = str(path)
        store.save_record(
            self.root,
            RunRecord(
                descriptor=record.descriptor,
                bindings=record.bindings,
                manifest=record.manifest,
                output_paths=paths,
                note=record.note,
            ),
        )

    # -- launching ---------------------------------------------------------------

    def _launch(self, request: Request) -> Response:
        obj = request.json()
        if not isinstance(obj, dict):
            raise HttpError(400, {"error": "expected a JSON object"})

        workflow = None
        if "ref" in obj:
            ref_text = str(obj["ref"])
            wf_id, sep, version = ref_text.partition("@")
            if not sep or not wf_id or not version.isdigit():
                raise HttpError(400, {"error": f"ref must be ID@VERSION, got {ref_text!r}"})
            workflow = WorkflowRef(wf_id, int(version), self.config.repo_base)
            definition, format_tag = self._proxied(
                lambda: self.repo.fetch_definition(workflow.repository_id, workflow.version)
            )
        elif "definition" in obj:
            definition = _b64_field(obj, "definition")
            format_tag = str(obj.get("format", "flowlite"))
        else:
            raise HttpError(400, {"error": "expected ref or definition"})

        bindings = obj.get("bindings", {})
        if not isinstance(bindings, dict):
            raise HttpError(400, {"error": "bindings must be an object"})
        live: dict[str, InputBinding] = {}
        for port, value in bindings.items():
            if isinstance(value, list):
                if not all(isinstance(item, str) for item in value):
                    raise HttpError(400, {"error": f"binding {port} has non-text items"})
                text = "".join(item + "\n" for item in value)
            elif isinstance(value, str):
                text = value
            else:
                raise HttpError(400, {"error": f"binding {port} must be text or a list"})
            live[port] = InputBinding(port, inline=text)

        if obj.get("reuse") and workflow is not None:
            for stored_binding in store.last_inputs(self.root, workflow):
                if stored_binding.port not in live and stored_binding.inline is not None:
                    live[stored_binding.port] = stored_binding.to_binding()

        run = self._proxied(
            lambda: self.execs.create_run(
                definition, definition_format=format_tag, workflow=workflow
            )
        )
        try:
            for binding in live.values():
                self._proxied(lambda b=binding: self.execs.set_input(run, b))
            descriptor = self._proxied(lambda: self.execs.start(run))
        except HttpError:
            # The half-fed run is useless to the UI; don't leak it.
            try:
                self.execs.delete_run(run)
            except Exception:
                pass
            raise

        stored = tuple(StoredBinding.from_binding(b) for b in live.values())
        store.save_record(self.root, RunRecord(descriptor=descriptor, bindings=stored))
        return json_response({"run": descriptor.to_json_obj()}, status=201)

    # -- static UI ------------------------------------------------------------------

    def _static(self, request: Request) -> Response:
        rel = request.params["path"] or "index.html"
        if self.static_dir is None:
            if rel != "index.html":
                raise HttpError(404, {"error": "no such file"})
            return Response(body=_PLACEHOLDER_PAGE, content_type="text/html; charset=utf-8")
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve()) + os.sep) and target != self.static_dir.resolve():
            raise HttpError(404, {"error": "no such file"})
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            # Unknown non-asset paths get the app shell (hash routing).
            target = self.static_dir / "index.html"
            if not target.is_file():
                raise HttpError(404, {"error": "no such file"})
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        if content_type.startswith("text/") or content_type in (
            "application/javascript",
            "application/json",
            "image/svg+xml",
        ):
            content_type += "; charset=utf-8"
        return Response(body=target.read_bytes(), content_type=content_type)


def find_static_dir() -> Path | None:
    """UI bundle discovery: env override, then a bundle shipped inside the
    package, then a frontend build next to the current directory."""
    env = os.environ.get("POCKETFLOW_UI")
    candidates = [Path(env)] if env else []
    candidates.append(Path(__file__).parent / "ui")
    candidates.append(Path.cwd() / "frontend" / "dist")
    for candidate in candidates:
        if (candidate / "index.html").is_file():
            return candidate
    return None


def serve_gateway(config: Config, bind: str, json_mode: bool = False) -> int:
    gateway = Gateway(config, bind=bind, static_dir=find_static_dir())
    uri = gateway.start()
    if json_mode:
        print(json.dumps({"ui": uri + "/"}), flush=True)
    else:
        print(f"ui: {uri}/", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        gateway.close()
    return 0

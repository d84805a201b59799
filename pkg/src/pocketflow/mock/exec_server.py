"""Mock execution service speaking the execution wire protocol.

Routes:

    POST   /runs                       create from {"format","definition",["workflow"]}
    GET    /runs                       list descriptors
    GET    /runs/{id}                  descriptor; 410 after expiry, 404 after purge
    POST   /runs/{id}/files            stage {"name","content"(base64)} for file bindings
    PUT    /runs/{id}/inputs/{port}    bind {"inline": text} or {"file": staged-name}
    PUT    /runs/{id}/status           {"state":"Running"} to start, {"state":"Cancelled"} to cancel
    GET    /runs/{id}/outputs          manifest once the run stopped
    GET    /runs/{id}/outputs/{port}   raw canonical bytes of one output
    DELETE /runs/{id}                  forget the run

Execution is scripted: a run takes ``script.duration`` seconds and then
completes (computing real dataflow outputs) or fails with a canned reason.
Zero-duration scripts finish inside the start request, which keeps request
sequences reproducible. Expiry is evaluated lazily against the injected
clock, so tests can steer time without sleeping.
"""

from __future__ import annotations

import base64
import hashlib
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable

from pocketflow import flowlite
from pocketflow.errors import (
    FlowFormatError,
    FlowSyntaxError,
    FlowValidationError,
    DecodeError,
)
from pocketflow.httpd import ApiService, FaultPolicy, HttpError, Request, Response, json_response
from pocketflow.model import (
    PortSpec,
    RunDescriptor,
    RunEvent,
    RunState,
    WorkflowRef,
    format_rfc3339,
    transition,
    utc_now,
)

OUTPUT_MEDIA_TYPE = "text/plain; charset=utf-8"
DEFAULT_MAX_UPLOAD = 8 * 1024 * 1024


@dataclass(frozen=True)
class ExecutionScript:
    """How the mock should act out a run."""

    duration: float = 0.0
    outcome: str = "Complete"  # "Complete" | "Fail"
    reason: str = "scripted failure"

    def __post_init__(self) -> None:
        if self.outcome not in ("Complete", "Fail"):
            raise ValueError(f"unsupported outcome {self.outcome!r}")


@dataclass
class _Run:
    run_id: str
    graph: flowlite.FlowGraph
    in_specs: tuple[PortSpec, ...]
    out_specs: tuple[PortSpec, ...]
    workflow: WorkflowRef | None
    state: RunState
    created_at: datetime
    expiry_at: datetime
    purge_at: datetime
    started_at: datetime | None = None
    finished_at: datetime | None = None
    reason: str | None = None
    files: dict[str, bytes] = field(default_factory=dict)
    bindings: dict[str, flowlite.Value] = field(default_factory=dict)
    outputs: dict[str, tuple[bytes, int]] = field(default_factory=dict)
    # digests frozen at completion; later tampering with the bytes must show
    manifest: list[dict] = field(default_factory=list)
    timer: threading.Timer | None = None

    def descriptor_obj(self, server_base: str) -> dict:
        descriptor = RunDescriptor(
            run_id=self.run_id,
            server_base=server_base,
            state=self.state,
            expiry_at=self.expiry_at,
            workflow=self.workflow,
            created_at=self.created_at,
            started_at=self.started_at,
            finished_at=self.finished_at,
        )
        obj = descriptor.to_json_obj()
        if self.state is RunState.FAILED and self.reason:
            obj["reason"] = self.reason
        return obj

    def missing_inputs(self) -> list[str]:
        return sorted(
            spec.name for spec in self.in_specs
            if spec.required and spec.name not in self.bindings
        )


class MockExecServer(ApiService):
    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        retention: timedelta = timedelta(hours=24),
        fault_policy: FaultPolicy | None = None,
        script: ExecutionScript | None = None,
        script_factory: Callable[[], ExecutionScript] | None = None,
        max_upload: int = DEFAULT_MAX_UPLOAD,
        clock: Callable[[], datetime] | None = None,
    ) -> None:
        super().__init__(host=host, port=port, fault_policy=fault_policy)
        self.retention = retention
        self.max_upload = max_upload
        self.clock = clock or utc_now
        self.script = script or ExecutionScript()
        self.script_factory = script_factory or (lambda: self.script)
        self._runs: dict[str, _Run] = {}
        self._lock = threading.RLock()
        self.on_close(self._cancel_timers)

        self.add_route("POST", r"/runs", self._create)
        self.add_route("GET", r"/runs", self._list)
        self.add_route("GET", r"/runs/(?P<id>[^/]+)", self._status)
        self.add_route("DELETE", r"/runs/(?P<id>[^/]+)", self._delete)
        self.add_route("POST", r"/runs/(?P<id>[^/]+)/files", self._upload)
        self.add_route("PUT", r"/runs/(?P<id>[^/]+)/inputs/(?P<port>[^/]+)", self._bind)
        self.add_route("PUT", r"/runs/(?P<id>[^/]+)/status", self._set_status)
        self.add_route("GET", r"/runs/(?P<id>[^/]+)/outputs", self._outputs)
        self.add_route("GET", r"/runs/(?P<id>[^/]+)/outputs/(?P<port>[^/]+)", self._output_bytes)

    # -- time and lifecycle plumbing --

    def _cancel_timers(self) -> None:
        with self._lock:
            for run in self._runs.values():
                if run.timer is not None:
                    run.timer.cancel()

    def _advance(self, run: _Run, now: datetime) -> bool:
        """Apply lazy expiry/purge. Returns False when the run is purged."""
        if now >= run.purge_at:
            if run.timer is not None:
                run.timer.cancel()
            del self._runs[run.run_id]
            return False
        if now >= run.expiry_at and run.state is not RunState.EXPIRED:
            if run.timer is not None:
                run.timer.cancel()
                run.timer = None
            # walk the run to Expired along legal transitions only
            if run.state in (RunState.CREATED, RunState.READY, RunState.RUNNING):
                run.state = transition(run.state, RunEvent.CANCEL)
                run.finished_at = run.finished_at or run.expiry_at
            run.state = transition(run.state, RunEvent.EXPIRE)
        return True

    def _get(self, run_id: str, allow_expired: bool = False) -> _Run:
        """Fetch a live run, applying expiry. Raises 404/410 HttpError."""
        run = self._runs.get(run_id)
        if run is None:
            raise HttpError(404, {"error": "no such run"})
        if not self._advance(run, self.clock()):
            raise HttpError(404, {"error": "no such run"})
        if run.state is RunState.EXPIRED and not allow_expired:
            raise HttpError(410, {"error": "run expired", "run": run.descriptor_obj(self.base_uri)})
        return run

    # -- handlers --

    def _create(self, request: Request) -> Response:
        obj = request.json()
        if not isinstance(obj, dict) or "format" not in obj or "definition" not in obj:
            raise HttpError(400, {"error": "body must carry format and definition"})
        if obj["format"] != "flowlite":
            raise HttpError(422, {"error": f"unsupported format: {obj['format']}"})
        try:
            definition = base64.b64decode(obj["definition"], validate=True)
        except (TypeError, ValueError):
            raise HttpError(400, {"error": "definition is not valid base64"}) from None
        try:
            graph = flowlite.parse(definition)
            in_specs, out_specs = flowlite.interface(graph)
        except (FlowSyntaxError, FlowFormatError, FlowValidationError) as err:
            raise HttpError(422, {"error": f"definition rejected: {err}"}) from None

        workflow = None
        if obj.get("workflow") is not None:
            try:
                workflow = WorkflowRef.from_json_obj(obj["workflow"])
            except DecodeError:
                raise HttpError(400, {"error": "bad workflow ref"}) from None

        now = self.clock()
        run = _Run(
            run_id=str(uuid.uuid4()),
            graph=graph,
            in_specs=in_specs,
            out_specs=out_specs,
            workflow=workflow,
            state=RunState.CREATED,
            created_at=now,
            expiry_at=now + self.retention,
            purge_at=now + self.retention * 2,
        )
        if not run.missing_inputs():
            # nothing to bind, the run is ready as soon as it exists
            run.state = transition(run.state, RunEvent.BIND_COMPLETE)
        with self._lock:
            self._runs[run.run_id] = run
            body = run.descriptor_obj(self.base_uri)
        return json_response(body, status=201, headers=(("Location", f"/runs/{run.run_id}"),))

    def _list(self, request: Request) -> Response:
        now = self.clock()
        with self._lock:
            keep = [run for run in list(self._runs.values()) if self._advance(run, now)]
            keep.sort(key=lambda r: (r.created_at, r.run_id))
            return json_response({"runs": [run.descriptor_obj(self.base_uri) for run in keep]})

    def _status(self, request: Request) -> Response:
        with self._lock:
            run = self._get(request.params["id"])
            return json_response(run.descriptor_obj(self.base_uri))

    def _delete(self, request: Request) -> Response:
        with self._lock:
            run = self._runs.pop(request.params["id"], None)
            if run is None:
                raise HttpError(404, {"error": "no such run"})
            if run.timer is not None:
                run.timer.cancel()
        return Response(status=204, body=b"", content_type="text/plain; charset=utf-8")

    def _upload(self, request: Request) -> Response:
        obj = request.json()
        if not isinstance(obj, dict) or not obj.get("name") or "content" not in obj:
            raise HttpError(400, {"error": "body must carry name and content"})
        name = obj["name"]
        if not isinstance(name, str) or "/" in name or name in (".", ".."):
            raise HttpError(400, {"error": "bad file name"})
        try:
            content = base64.b64decode(obj["content"], validate=True)
        except (TypeError, ValueError):
            raise HttpError(400, {"error": "content is not valid base64"}) from None
        if len(content) > self.max_upload:
            raise HttpError(413, {"error": "file too large", "limit": self.max_upload})
        with self._lock:
            run = self._get(request.params["id"])
            if run.state not in (RunState.CREATED, RunState.READY):
                raise HttpError(409, {"error": f"illegal state: {run.state.value}"})
            run.files[name] = content
        return json_response(
            {
                "name": name,
                "byte_size": len(content),
                "sha256": hashlib.sha256(content).hexdigest(),
            },
            status=201,
        )

    def _bind(self, request: Request) -> Response:
        obj = request.json()
        if not isinstance(obj, dict):
            raise HttpError(400, {"error": "body must be an object"})
        has_inline = "inline" in obj
        has_file = "file" in obj
        if has_inline == has_file:
            raise HttpError(400, {"error": "exactly one of inline or file"})

        with self._lock:
            run = self._get(request.params["id"])
            if run.state not in (RunState.CREATED, RunState.READY):
                raise HttpError(409, {"error": f"illegal state: {run.state.value}"})
            port = request.params["port"]
            spec = next((s for s in run.in_specs if s.name == port), None)
            if spec is None:
                raise HttpError(404, {"error": f"unknown port: {port}"})

            if has_inline:
                if not isinstance(obj["inline"], str):
                    raise HttpError(400, {"error": "inline value must be text"})
                data = obj["inline"].encode("utf-8")
            else:
                if obj["file"] not in run.files:
                    raise HttpError(409, {"error": f"file not uploaded: {obj['file']}"})
                data = run.files[obj["file"]]
            try:
                run.bindings[port] = flowlite.value_from_bytes(data, spec.depth)
            except UnicodeDecodeError:
                raise HttpError(400, {"error": "value is not UTF-8 text"}) from None

            if run.state is RunState.CREATED and not run.missing_inputs():
                run.state = transition(run.state, RunEvent.BIND_COMPLETE)
            return json_response(run.descriptor_obj(self.base_uri))

    def _set_status(self, request: Request) -> Response:
        obj = request.json()
        target = obj.get("state") if isinstance(obj, dict) else None
        if target == RunState.RUNNING.value:
            return self._start(request.params["id"])
        if target == RunState.CANCELLED.value:
            return self._cancel(request.params["id"])
        raise HttpError(400, {"error": f"unsupported target state: {target!r}"})

    def _start(self, run_id: str) -> Response:
        with self._lock:
            run = self._get(run_id)
            if run.state is RunState.CREATED:
                raise HttpError(409, {"error": "not ready", "missing": run.missing_inputs()})
            if run.state is not RunState.READY:
                raise HttpError(409, {"error": f"illegal state: {run.state.value}"})
            run.state = transition(run.state, RunEvent.START)
            run.started_at = self.clock()
            script = self.script_factory()
            if script.duration <= 0:
                self._finish(run, script)
            else:
                run.timer = threading.Timer(script.duration, self._timer_fired, (run_id, script))
                run.timer.daemon = True
                run.timer.start()
            return json_response(run.descriptor_obj(self.base_uri))

    def _cancel(self, run_id: str) -> Response:
        with self._lock:
            run = self._get(run_id)
            if run.state not in (RunState.CREATED, RunState.READY, RunState.RUNNING):
                raise HttpError(409, {"error": f"illegal state: {run.state.value}"})
            run.state = transition(run.state, RunEvent.CANCEL)
            run.finished_at = self.clock()
            if run.timer is not None:
                run.timer.cancel()
                run.timer = None
            return json_response(run.descriptor_obj(self.base_uri))

    def _timer_fired(self, run_id: str, script: ExecutionScript) -> None:
        with self._lock:
            run = self._runs.get(run_id)
            if run is None or run.state is not RunState.RUNNING:
                return  # cancelled, expired, or deleted while "executing"
            if not self._advance(run, self.clock()) or run.state is not RunState.RUNNING:
                return
            self._finish(run, script)

    def _finish(self, run: _Run, script: ExecutionScript) -> None:
        """Complete or fail a Running run. Caller holds the lock."""
        run.timer = None
        if script.outcome == "Fail":
            # Failure reporting is uniform with normal outputs: one synthetic
            # "error" entry carrying the diagnostic text.
            data = script.reason.encode("utf-8")
            run.outputs["error"] = (data, 0)
            run.manifest.append({
                "port": "error",
                "depth": 0,
                "media_type": OUTPUT_MEDIA_TYPE,
                "byte_size": len(data),
                "sha256": hashlib.sha256(data).hexdigest(),
                "remote_path": f"/runs/{run.run_id}/outputs/error",
            })
            run.state = transition(run.state, RunEvent.FAIL)
            run.reason = script.reason
        else:
            values = flowlite.execute(run.graph, run.bindings)
            for spec in run.out_specs:
                data = flowlite.value_to_bytes(values[spec.name])
                run.outputs[spec.name] = (data, spec.depth)
                run.manifest.append({
                    "port": spec.name,
                    "depth": spec.depth,
                    "media_type": OUTPUT_MEDIA_TYPE,
                    "byte_size": len(data),
                    "sha256": hashlib.sha256(data).hexdigest(),
                    "remote_path": f"/runs/{run.run_id}/outputs/{spec.name}",
                })
            run.state = transition(run.state, RunEvent.COMPLETE)
        run.finished_at = self.clock()

    def _manifest_obj(self, run: _Run) -> dict:
        return {"run_id": run.run_id, "entries": run.manifest}

    def _outputs(self, request: Request) -> Response:
        with self._lock:
            run = self._get(request.params["id"])
            if run.state in (RunState.CREATED, RunState.READY, RunState.RUNNING):
                raise HttpError(409, {"error": "not finished"})
            return json_response(self._manifest_obj(run))

    def _output_bytes(self, request: Request) -> Response:
        with self._lock:
            run = self._get(request.params["id"])
            if run.state in (RunState.CREATED, RunState.READY, RunState.RUNNING):
                raise HttpError(409, {"error": "not finished"})
            port = request.params["port"]
            if port not in run.outputs:
                raise HttpError(404, {"error": f"no such output: {port}"})
            data, depth = run.outputs[port]
            return Response(
                body=data,
                content_type=OUTPUT_MEDIA_TYPE,
                headers=(("X-Depth", str(depth)),),
            )

    # -- test instrumentation --

    def corrupt_output(self, run_id: str, port: str, data: bytes) -> None:
        """Swap stored output bytes without touching the manifest digest."""
        with self._lock:
            run = self._runs[run_id]
            _, depth = run.outputs[port]
            run.outputs[port] = (data, depth)

    def run_snapshot(self, run_id: str) -> dict:
        """Descriptor as the wire would report it right now (for tests)."""
        with self._lock:
            run = self._get(run_id, allow_expired=True)
            return run.descriptor_obj(self.base_uri)

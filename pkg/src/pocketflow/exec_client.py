"""Client for the execution service wire protocol.

Submits definitions, binds inputs, drives the run lifecycle, polls runs to
completion with capped exponential backoff, and fetches digest-verified
outputs.
"""

from __future__ import annotations

import base64
import hashlib
import time
from pathlib import Path
from typing import Any, Callable

import requests

from pocketflow.errors import (
    DeadlineExceeded,
    DecodeError,
    DigestMismatch,
    Gone,
    IllegalState,
    NotFinished,
    NotFound,
    NotReady,
    ProtocolError,
    Rejected,
    TooLarge,
)
from pocketflow.model import (
    MONITOR_TERMINAL_STATES,
    InputBinding,
    OutputArtifact,
    OutputManifest,
    RunDescriptor,
    WorkflowRef,
)
from pocketflow.transport import Transport, json_of

Observer = Callable[[RunDescriptor], None]


def _excerpt(response: requests.Response, limit: int = 200) -> str:
    return response.text[:limit]


def _error_text(response: requests.Response) -> str:
    try:
        obj = response.json()
    except ValueError:
        return _excerpt(response)
    if isinstance(obj, dict) and isinstance(obj.get("error"), str):
        return obj["error"]
    return _excerpt(response)


class ExecClient:
    def __init__(self, base: str, transport: Transport | None = None) -> None:
        self.base = base.rstrip("/")
        self.transport = transport or Transport()

    # -- plumbing --

    @staticmethod
    def _run_id(run: RunDescriptor | str) -> str:
        return run.run_id if isinstance(run, RunDescriptor) else run

    def _run_uri(self, run: RunDescriptor | str, suffix: str = "") -> str:
        return f"{self.base}/runs/{self._run_id(run)}{suffix}"

    def _descriptor(self, obj: Any) -> RunDescriptor:
        descriptor = RunDescriptor.from_json_obj(obj, server_base=self.base)
        descriptor.check_invariants()
        return descriptor

    def _gone(self, response: requests.Response, what: str) -> Gone:
        descriptor = None
        try:
            obj = response.json()
            if isinstance(obj, dict) and isinstance(obj.get("run"), dict):
                descriptor = self._descriptor(obj["run"])
        except (ValueError, DecodeError):
            descriptor = None
        return Gone(what, descriptor)

    # -- lifecycle operations --

    def create_run(
        self,
        definition: bytes,
        definition_format: str = "flowlite",
        workflow: WorkflowRef | None = None,
    ) -> RunDescriptor:
        """Submit a definition; the new run starts in Created (or Ready when
        it has no inputs to bind)."""
        body: dict[str, Any] = {
            "format": definition_format,
            "definition": base64.b64encode(definition).decode("ascii"),
        }
        if workflow is not None:
            body["workflow"] = workflow.to_json_obj()
        response = self.transport.post(f"{self.base}/runs", json_body=body)
        if response.status_code == 422:
            raise Rejected(_error_text(response))
        if response.status_code != 201:
            raise ProtocolError(response.status_code, _excerpt(response))
        return self._descriptor(json_of(response))

    def upload_file(self, run: RunDescriptor | str, name: str, content: bytes) -> dict[str, Any]:
        """Stage a file on the run for later {"file": name} bindings."""
        response = self.transport.post(
            self._run_uri(run, "/files"),
            json_body={"name": name, "content": base64.b64encode(content).decode("ascii")},
        )
        if response.status_code == 404:
            raise NotFound(f"run {self._run_id(run)}")
        if response.status_code == 410:
            raise self._gone(response, f"run {self._run_id(run)}")
        if response.status_code == 413:
            raise TooLarge(_error_text(response))
        if response.status_code == 409:
            raise IllegalState(_error_text(response))
        if response.status_code != 201:
            raise ProtocolError(response.status_code, _excerpt(response))
        return json_of(response)

    def set_input(self, run: RunDescriptor | str, binding: InputBinding) -> RunDescriptor:
        """Bind one input port from an inline value or a staged file.

        Local-file bindings never reach the wire: upload first, then bind the
        staged name.
        """
        if binding.variant == "inline":
            body = {"inline": binding.inline}
        elif binding.variant == "remote_file":
            body = {"file": binding.remote_file}
        else:
            raise ValueError("local file bindings must be uploaded, then bound by name")
        response = self.transport.put(
            self._run_uri(run, f"/inputs/{binding.port}"), json_body=body
        )
        if response.status_code == 404:
            raise NotFound(_error_text(response))
        if response.status_code == 410:
            raise self._gone(response, f"run {self._run_id(run)}")
        if response.status_code == 409:
            raise IllegalState(_error_text(response))
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return self._descriptor(json_of(response))

    def start(self, run: RunDescriptor | str) -> RunDescriptor:
        response = self.transport.put(
            self._run_uri(run, "/status"), json_body={"state": "Running"}
        )
        if response.status_code == 404:
            raise NotFound(f"run {self._run_id(run)}")
        if response.status_code == 410:
            raise self._gone(response, f"run {self._run_id(run)}")
        if response.status_code == 409:
            obj = {}
            try:
                obj = response.json()
            except ValueError:
                pass
            if isinstance(obj, dict) and "missing" in obj:
                raise NotReady(list(obj["missing"]))
            raise IllegalState(_error_text(response))
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return self._descriptor(json_of(response))

    def cancel(self, run: RunDescriptor | str) -> RunDescriptor:
        response = self.transport.put(
            self._run_uri(run, "/status"), json_body={"state": "Cancelled"}
        )
        if response.status_code == 404:
            raise NotFound(f"run {self._run_id(run)}")
        if response.status_code == 410:
            raise self._gone(response, f"run {self._run_id(run)}")
        if response.status_code == 409:
            raise IllegalState(_error_text(response))
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return self._descriptor(json_of(response))

    def poll_status(self, run: RunDescriptor | str) -> RunDescriptor:
        response = self.transport.get(self._run_uri(run))
        if response.status_code == 404:
            raise NotFound(f"run {self._run_id(run)}")
        if response.status_code == 410:
            raise self._gone(response, f"run {self._run_id(run)}")
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return self._descriptor(json_of(response))

    def list_runs(self) -> list[RunDescriptor]:
        response = self.transport.get(f"{self.base}/runs")
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        obj = json_of(response)
        try:
            return [self._descriptor(entry) for entry in obj["runs"]]
        except (KeyError, TypeError) as exc:
            raise DecodeError(f"bad run list: {exc}") from exc

    def delete_run(self, run: RunDescriptor | str) -> None:
        response = self.transport.delete(self._run_uri(run))
        if response.status_code == 404:
            raise NotFound(f"run {self._run_id(run)}")
        if response.status_code != 204:
            raise ProtocolError(response.status_code, _excerpt(response))

    # -- outputs --

    def fetch_outputs(self, run: RunDescriptor | str) -> OutputManifest:
        response = self.transport.get(self._run_uri(run, "/outputs"))
        if response.status_code == 404:
            raise NotFound(f"run {self._run_id(run)}")
        if response.status_code == 410:
            raise self._gone(response, f"run {self._run_id(run)}")
        if response.status_code == 409:
            raise NotFinished(_error_text(response))
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        return OutputManifest.from_json_obj(json_of(response))

    def fetch_output_bytes(
        self, run: RunDescriptor | str, port: str, manifest: OutputManifest | None = None
    ) -> tuple[bytes, OutputArtifact]:
        """One output's canonical bytes, verified against its manifest digest."""
        if manifest is None:
            manifest = self.fetch_outputs(run)
        artifact = manifest.entry(port)
        if artifact is None:
            raise NotFound(f"output {port!r} of run {self._run_id(run)}")
        response = self.transport.get(self._run_uri(run, f"/outputs/{port}"))
        if response.status_code == 404:
            raise NotFound(_error_text(response))
        if response.status_code == 410:
            raise self._gone(response, f"run {self._run_id(run)}")
        if response.status_code == 409:
            raise NotFinished(_error_text(response))
        if response.status_code != 200:
            raise ProtocolError(response.status_code, _excerpt(response))
        data = response.content
        digest = hashlib.sha256(data).hexdigest()
        if digest != artifact.sha256:
            raise DigestMismatch(port, expected=artifact.sha256, actual=digest)
        return data, artifact

    def download_output(
        self,
        run: RunDescriptor | str,
        port: str,
        dest_dir: Path,
        manifest: OutputManifest | None = None,
    ) -> Path:
        """Save one verified output under dest_dir/<run_id>/<port>."""
        data, _ = self.fetch_output_bytes(run, port, manifest=manifest)
        target = Path(dest_dir) / self._run_id(run) / port
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
        return target

    # -- monitoring --

    def monitor(
        self,
        run: RunDescriptor | str,
        observer: Observer | None = None,
        deadline: float | None = None,
        initial_interval: float = 0.5,
        backoff_factor: float = 1.5,
        max_interval: float = 5.0,
        sleeper: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ) -> RunDescriptor:
        """Poll until the run settles (Finished, Failed, Cancelled, Expired).

        Polls immediately, then backs off geometrically up to max_interval.
        The observer fires on the first observation and after every state
        change. ``deadline`` is seconds from now; DeadlineExceeded carries
        the last descriptor seen.
        """
        give_up_at = None if deadline is None else clock() + deadline
        interval = initial_interval
        last: RunDescriptor | None = None
        while True:
            try:
                current = self.poll_status(run)
            except Gone as gone:
                if gone.descriptor is None:
                    raise
                current = gone.descriptor
            if last is None or current.state is not last.state:
                if observer is not None:
                    observer(current)
            last = current
            if current.state in MONITOR_TERMINAL_STATES:
                return current
            if give_up_at is not None and clock() >= give_up_at:
                raise DeadlineExceeded(last)
            sleeper(interval)
            interval = min(interval * backoff_factor, max_interval)

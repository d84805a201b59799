"""Threaded HTTP service base shared by the bundled mock services and the
gateway.

Keeps the parts every service needs in one place: a regex route table,
JSON helpers, an arrival-ordered request log, and optional fault injection
(fixed added latency and a seeded random 503 rate) for exercising client
retry behaviour.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Pattern
from urllib.parse import parse_qs, unquote, urlsplit

from pocketflow.errors import BindFailed

import re


def json_bytes(obj: Any) -> bytes:
    """Compact, key-sorted JSON. Responses stay byte-stable across runs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass
class Response:
    status: int = 200
    body: bytes = b""
    content_type: str = "application/json; charset=utf-8"
    headers: tuple[tuple[str, str], ...] = ()


def json_response(obj: Any, status: int = 200, headers: tuple[tuple[str, str], ...] = ()) -> Response:
    return Response(status=status, body=json_bytes(obj), headers=headers)


class HttpError(Exception):
    """Raised inside handlers to produce a JSON error response."""

    def __init__(self, status: int, obj: Any) -> None:
        super().__init__(f"{status}: {obj}")
        self.status = status
        self.obj = obj


@dataclass
class Request:
    method: str
    path: str
    query: dict[str, list[str]]
    headers: Any
    body: bytes
    params: dict[str, str]

    def json(self) -> Any:
        try:
            return json.loads(self.body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise HttpError(400, {"error": "body is not valid JSON"}) from None

    def query_one(self, name: str, default: str | None = None) -> str | None:
        values = self.query.get(name)
        return values[0] if values else default


@dataclass(frozen=True)
class LogEntry:
    """One received request, stamped on arrival (before any injected latency)."""

    method: str
    path: str
    raw_query: str
    monotonic: float
    wall: float


@dataclass
class FaultPolicy:
    """Deterministic fault injection: every request first waits
    ``added_latency`` seconds, then fails with 503 at ``failure_rate``
    using a seeded generator."""

    added_latency: float = 0.0
    failure_rate: float = 0.0
    seed: int = 0
    _rng: random.Random = field(init=False, repr=False)
    _lock: threading.Lock = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._rng = random.Random(self.seed)
        self._lock = threading.Lock()

    def should_fail(self) -> bool:
        if self.failure_rate <= 0.0:
            return False
        with self._lock:
            return self._rng.random() < self.failure_rate


Handler = Callable[[Request], Response]


class _Listener(ThreadingHTTPServer):
    # the stdlib backlog of 5 drops connections under concurrent clients
    request_queue_size = 128


class _RequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt: str, *args: Any) -> None:  # quiet by default
        pass

    def _dispatch(self) -> None:
        service: ApiService = self.server.service  # type: ignore[attr-defined]
        parts = urlsplit(self.path)
        path = unquote(parts.path)
        service._log(LogEntry(
            method=self.command,
            path=path,
            raw_query=parts.query,
            monotonic=time.monotonic(),
            wall=time.time(),
        ))

        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""

        fault = service.fault_policy
        if fault is not None:
            if fault.added_latency > 0:
                time.sleep(fault.added_latency)
            if fault.should_fail():
                self._send(json_response({"error": "injected failure"}, status=503))
                return

        matched_path = False
        for method, pattern, handler in service.routes:
            match = pattern.fullmatch(path)
            if match is None:
                continue
            matched_path = True
            if method != self.command:
                continue
            request = Request(
                method=self.command,
                path=path,
                query=parse_qs(parts.query),
                headers=self.headers,
                body=body,
                params={k: v for k, v in match.groupdict().items() if v is not None},
            )
            try:
                response = handler(request)
            except HttpError as err:
                response = json_response(err.obj, status=err.status)
            except Exception as err:  # noqa: BLE001 - a mock must not die mid-suite
                response = json_response({"error": f"internal: {err!r}"}, status=500)
            self._send(response)
            return

        if matched_path:
            self._send(json_response({"error": "method not allowed"}, status=405))
        else:
            self._send(json_response({"error": "no route"}, status=404))

    def _send(self, response: Response) -> None:
        try:
            self.send_response(response.status)
            self.send_header("Content-Type", response.content_type)
            self.send_header("Content-Length", str(len(response.body)))
            for name, value in response.headers:
                self.send_header(name, value)
            self.end_headers()
            if self.command != "HEAD":
                self.wfile.write(response.body)
        except (BrokenPipeError, ConnectionResetError):
            pass  # client went away mid-response

    do_GET = _dispatch
    do_POST = _dispatch
    do_PUT = _dispatch
    do_DELETE = _dispatch
    do_HEAD = _dispatch


class ApiService:
    """One listening HTTP service with a regex route table.

    Subclasses (or callers) register routes before ``start``. Route patterns
    match the full decoded path; named groups become ``request.params``.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 fault_policy: FaultPolicy | None = None) -> None:
        self.routes: list[tuple[str, Pattern[str], Handler]] = []
        self.fault_policy = fault_policy
        self.request_log: list[LogEntry] = []
        self._log_lock = threading.Lock()
        self._on_close: list[Callable[[], None]] = []
        try:
            self._server = _Listener((host, port), _RequestHandler)
        except OSError as err:
            raise BindFailed(f"cannot bind {host}:{port}: {err}") from err
        self._server.daemon_threads = True
        self._server.service = self  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    # -- configuration --

    def add_route(self, method: str, pattern: str, handler: Handler) -> None:
        self.routes.append((method, re.compile(pattern), handler))

    def on_close(self, callback: Callable[[], None]) -> None:
        self._on_close.append(callback)

    # -- lifecycle --

    @property
    def base_uri(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> str:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.base_uri

    def close(self) -> None:
        for callback in self._on_close:
            callback()
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "ApiService":
        self.start()
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    # -- observation --

    def _log(self, entry: LogEntry) -> None:
        with self._log_lock:
            self.request_log.append(entry)

    def logged(self, method: str | None = None, path_prefix: str = "") -> list[LogEntry]:
        with self._log_lock:
            entries = list(self.request_log)
        return [
            e for e in entries
            if (method is None or e.method == method) and e.path.startswith(path_prefix)
        ]

    def clear_log(self) -> None:
        with self._log_lock:
            self.request_log.clear()


def wait_until(predicate: Callable[[], bool], timeout: float = 5.0, interval: float = 0.01) -> bool:
    """Poll ``predicate`` until true or the timeout lapses."""
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return predicate()


def split_bind(text: str) -> tuple[str, int]:
    """Parse a HOST:PORT bind string."""
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"bind must be HOST:PORT, got {text!r}")
    return host, int(port)

"""HTTP transport shared by the service clients.

Centralizes the retry discipline: only idempotent GETs are retried, at most
three times after the initial attempt, sleeping 250/500/1000 ms between
attempts. A 503 counts as retryable (services use it for load shedding and
injected faults); any other status is returned to the caller untouched.
Non-GET requests are never retried, so a flaky network surfaces as a
TransportError instead of a duplicated run.
"""

from __future__ import annotations

import json
import time
from typing import Any, Callable, Mapping

import requests

from pocketflow.errors import DecodeError, TransportError

RETRY_SLEEPS: tuple[float, ...] = (0.25, 0.5, 1.0)
DEFAULT_TIMEOUT = 30.0

_RETRYABLE_STATUS = frozenset({503})


def json_of(response: requests.Response) -> Any:
    """Parse a JSON body, mapping malformed payloads to DecodeError."""
    try:
        return response.json()
    except ValueError as exc:
        raise DecodeError(f"bad JSON from {response.url}: {exc}") from exc


class Transport:
    """One HTTP client with a session, timeouts, and GET retries.

    ``sleeper`` exists for tests; production code keeps the default.
    """

    def __init__(
        self,
        timeout: float = DEFAULT_TIMEOUT,
        session: requests.Session | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        retry_sleeps: tuple[float, ...] = RETRY_SLEEPS,
    ) -> None:
        self.timeout = timeout
        self.session = session or requests.Session()
        self.sleeper = sleeper
        self.retry_sleeps = retry_sleeps

    def close(self) -> None:
        self.session.close()

    def __enter__(self) -> "Transport":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    def request(
        self,
        method: str,
        uri: str,
        json_body: Any | None = None,
        headers: Mapping[str, str] | None = None,
    ) -> requests.Response:
        """Issue one logical request, retrying GETs on transient failures.

        Returns the final response whatever its status, except that
        retryable failures (connection errors, timeouts, 503) exhaust into
        TransportError. For non-GET methods those failures raise immediately.
        """
        retries = self.retry_sleeps if method == "GET" else ()
        attempts = 0
        last_reason = "unreachable"
        for attempt in range(1 + len(retries)):
            if attempt:
                self.sleeper(retries[attempt - 1])
            attempts += 1
            try:
                response = self.session.request(
                    method,
                    uri,
                    data=json.dumps(json_body).encode("utf-8") if json_body is not None else None,
                    headers={
                        **({"Content-Type": "application/json; charset=utf-8"}
                           if json_body is not None else {}),
                        **(headers or {}),
                    },
                    timeout=self.timeout,
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_reason = f"{method} {uri}: {exc.__class__.__name__}"
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_reason = f"{method} {uri}: status {response.status_code}"
                continue
            return response
        raise TransportError(last_reason, attempts=attempts)

    # Sugar used throughout the clients.

    def get(self, uri: str, headers: Mapping[str, str] | None = None) -> requests.Response:
        return self.request("GET", uri, headers=headers)

    def post(self, uri: str, json_body: Any | None = None) -> requests.Response:
        return self.request("POST", uri, json_body=json_body)

    def put(self, uri: str, json_body: Any | None = None) -> requests.Response:
        return self.request("PUT", uri, json_body=json_body)

    def delete(self, uri: str) -> requests.Response:
        return self.request("DELETE", uri)

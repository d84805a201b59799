"""Exception types shared across the pocketflow modules.

Client-facing errors mirror the wire protocol's failure modes so callers can
branch on type instead of parsing messages.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from pocketflow.model import RunDescriptor, RunState


class PocketflowError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# core model
# ---------------------------------------------------------------------------


class IllegalTransition(PocketflowError):
    """A (state, event) pair outside the run lifecycle table."""

    def __init__(self, state: "RunState", event: object) -> None:
        super().__init__(f"illegal transition: {state.value} on {getattr(event, 'value', event)}")
        self.state = state
        self.event = event


class BindingValidationError(PocketflowError):
    """Input bindings failed validation against a port set.

    Carries all violations at once; each list is sorted by port name.
    """

    def __init__(
        self,
        missing: list[str] | None = None,
        unknown: list[str] | None = None,
        duplicate: list[str] | None = None,
    ) -> None:
        self.missing = sorted(missing or [])
        self.unknown = sorted(unknown or [])
        self.duplicate = sorted(duplicate or [])
        parts = []
        if self.missing:
            parts.append("missing inputs: " + ", ".join(self.missing))
        if self.unknown:
            parts.append("unknown ports: " + ", ".join(self.unknown))
        if self.duplicate:
            parts.append("duplicate bindings: " + ", ".join(self.duplicate))
        super().__init__("; ".join(parts) or "invalid bindings")


# ---------------------------------------------------------------------------
# wire clients
# ---------------------------------------------------------------------------


class TransportError(PocketflowError):
    """Connection failure, timeout, or service unavailable after retries."""

    def __init__(self, reason: str, attempts: int = 1) -> None:
        super().__init__(reason)
        self.reason = reason
        self.attempts = attempts


class ProtocolError(PocketflowError):
    """Unexpected non-2xx response."""

    def __init__(self, status: int, body_excerpt: str) -> None:
        super().__init__(f"unexpected status {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class DecodeError(PocketflowError):
    """Response payload did not match the documented schema."""


class NotFound(PocketflowError):
    """The addressed workflow, run, file, or port does not exist."""

    def __init__(self, what: str) -> None:
        super().__init__(f"not found: {what}")
        self.what = what


class Gone(PocketflowError):
    """The run expired; the server still remembers it existed.

    ``descriptor`` carries the final (Expired) descriptor when the server
    included one in the 410 body.
    """

    def __init__(self, what: str, descriptor: "RunDescriptor | None" = None) -> None:
        super().__init__(f"gone: {what}")
        self.what = what
        self.descriptor = descriptor


class Rejected(PocketflowError):
    """The server refused to create a run from the submitted definition."""

    def __init__(self, reason: str) -> None:
        super().__init__(f"definition rejected: {reason}")
        self.reason = reason


class IllegalState(PocketflowError):
    """Operation not allowed in the run's current lifecycle state."""


class TooLarge(PocketflowError):
    """Uploaded file exceeds the server's size limit."""


class NotReady(PocketflowError):
    """Start refused: required input ports are still unbound."""

    def __init__(self, missing: list[str]) -> None:
        self.missing = sorted(missing)
        super().__init__("run not ready, missing inputs: " + ", ".join(self.missing))


class NotFinished(PocketflowError):
    """Outputs requested before the run reached a reporting state."""


class DeadlineExceeded(PocketflowError):
    """Monitoring gave up before the run reached a terminal state."""

    def __init__(self, last: "RunDescriptor") -> None:
        super().__init__(f"deadline exceeded; last state {last.state.value}")
        self.last = last


class DigestMismatch(PocketflowError):
    """Downloaded bytes do not hash to the manifest's sha256."""

    def __init__(self, port: str, expected: str, actual: str) -> None:
        super().__init__(f"digest mismatch for output {port!r}: expected {expected}, got {actual}")
        self.port = port
        self.expected = expected
        self.actual = actual


# ---------------------------------------------------------------------------
# flowlite
# ---------------------------------------------------------------------------


class FlowSyntaxError(PocketflowError):
    """Input is not a well-formed flowlite document (bad JSON / not an object)."""


class FlowFormatError(PocketflowError):
    """Well-formed JSON that violates the flowlite schema.

    ``path`` is a slash-separated pointer into the document, e.g.
    ``/processors/1/name``.
    """

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class FlowValidationError(PocketflowError):
    """Base for graph-level validation failures."""


class CycleError(FlowValidationError):
    """The wire graph has a cycle; ``nodes`` lists one cycle in order."""

    def __init__(self, nodes: list[str]) -> None:
        super().__init__("cycle: " + " -> ".join(nodes))
        self.nodes = nodes


class UnknownSource(FlowValidationError):
    """A wire reference points at a port or processor that does not exist."""

    def __init__(self, ref: str) -> None:
        super().__init__(f"unknown source: {ref}")
        self.ref = ref


class BadSignature(FlowValidationError):
    """A processor's inputs do not match its operation's signature."""

    def __init__(self, processor: str, detail: str) -> None:
        super().__init__(f"processor {processor!r}: {detail}")
        self.processor = processor
        self.detail = detail


class DepthOverflow(FlowValidationError):
    """A wiring combination would produce a value deeper than one list level."""

    def __init__(self, where: str) -> None:
        super().__init__(f"{where}: value depth would exceed 1")
        self.where = where


# ---------------------------------------------------------------------------
# store
# ---------------------------------------------------------------------------


class UnsupportedSchema(PocketflowError):
    """A persisted file declares a schema version this build cannot read."""

    def __init__(self, path: str, found: object) -> None:
        super().__init__(f"{path}: unsupported schema {found!r}")
        self.path = path
        self.found = found


# ---------------------------------------------------------------------------
# servers
# ---------------------------------------------------------------------------


class BindFailed(PocketflowError):
    """A service could not bind its listening address."""

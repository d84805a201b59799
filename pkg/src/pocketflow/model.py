"""Domain types shared by every module: workflow identity and metadata,
run lifecycle, input bindings, and output manifests.

All types are immutable values; ``transition`` and ``validate_bindings`` are
pure functions, so everything here is safe to share between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from pocketflow.errors import BindingValidationError, DecodeError, IllegalTransition

IDENTIFIER_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def is_identifier(name: str) -> bool:
    return bool(IDENTIFIER_RE.match(name))


# ---------------------------------------------------------------------------
# timestamps (RFC 3339, UTC)
# ---------------------------------------------------------------------------


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def format_rfc3339(dt: datetime) -> str:
    """Serialize an aware datetime as an RFC 3339 UTC string with a Z suffix."""
    if dt.tzinfo is None:
        raise ValueError("naive datetime cannot be serialized")
    dt = dt.astimezone(timezone.utc)
    return dt.isoformat(timespec="microseconds").replace("+00:00", "Z")


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 string; accepts both Z and numeric offsets."""
    normalized = text[:-1] + "+00:00" if text.endswith("Z") else text
    try:
        dt = datetime.fromisoformat(normalized)
    except ValueError as exc:
        raise DecodeError(f"bad timestamp: {text!r}") from exc
    if dt.tzinfo is None:
        raise DecodeError(f"timestamp missing offset: {text!r}")
    return dt.astimezone(timezone.utc)


# ---------------------------------------------------------------------------
# workflow identity and metadata
# ---------------------------------------------------------------------------


class WorkflowFormat(str, Enum):
    FLOWLITE = "flowlite"
    OPAQUE = "opaque"


@dataclass(frozen=True)
class WorkflowRef:
    """Addressing scheme for repository workflows: (id, version) under a base URI."""

    repository_id: str
    version: int
    source_base: str

    def __post_init__(self) -> None:
        if not self.repository_id:
            raise ValueError("repository_id must be non-empty")
        if self.version < 1:
            raise ValueError("version must be >= 1")

    def __str__(self) -> str:
        return f"{self.repository_id}@{self.version}"

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "id": self.repository_id,
            "version": self.version,
            "source_base": self.source_base,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "WorkflowRef":
        try:
            return cls(str(obj["id"]), int(obj["version"]), str(obj.get("source_base", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"bad workflow ref: {obj!r}") from exc


@dataclass(frozen=True)
class WorkflowMetadata:
    """Repository record for one workflow version."""

    ref: WorkflowRef
    title: str
    uploader: str
    description: str
    rating: float
    diagram_uri: str
    definition_uri: str
    license: str
    format_tag: WorkflowFormat

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError("title must be non-empty")
        if not 0.0 <= self.rating <= 5.0:
            raise ValueError("rating must be within [0, 5]")

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "ref": self.ref.to_json_obj(),
            "title": self.title,
            "uploader": self.uploader,
            "description": self.description,
            "rating": self.rating,
            "diagram_uri": self.diagram_uri,
            "definition_uri": self.definition_uri,
            "license": self.license,
            "format": self.format_tag.value,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "WorkflowMetadata":
        try:
            return cls(
                ref=WorkflowRef.from_json_obj(obj["ref"]),
                title=str(obj["title"]),
                uploader=str(obj["uploader"]),
                description=str(obj["description"]),
                rating=float(obj["rating"]),
                diagram_uri=str(obj["diagram_uri"]),
                definition_uri=str(obj["definition_uri"]),
                license=str(obj["license"]),
                format_tag=WorkflowFormat(obj["format"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"bad workflow metadata: {exc}") from exc


@dataclass(frozen=True)
class PortSpec:
    """Declared input or output port. Depth 0 is a single text value,
    depth 1 a list of text values."""

    name: str
    depth: int
    description: str = ""
    required: bool = True

    def __post_init__(self) -> None:
        if not is_identifier(self.name):
            raise ValueError(f"port name {self.name!r} is not an identifier")
        if self.depth not in (0, 1):
            raise ValueError("depth must be 0 or 1")


@dataclass(frozen=True)
class InputBinding:
    """A port-name-to-value assignment. Exactly one variant is populated:

    - ``inline``: UTF-8 text typed in directly
    - ``file``: path of a local file whose bytes supply the value
    - ``remote_file``: name of a file previously uploaded to the run
    """

    port: str
    inline: str | None = None
    file: Path | None = None
    remote_file: str | None = None

    def __post_init__(self) -> None:
        populated = sum(v is not None for v in (self.inline, self.file, self.remote_file))
        if populated != 1:
            raise ValueError("exactly one of inline/file/remote_file must be set")

    @property
    def variant(self) -> str:
        if self.inline is not None:
            return "inline"
        if self.file is not None:
            return "file"
        return "remote_file"


# ---------------------------------------------------------------------------
# run lifecycle
# ---------------------------------------------------------------------------


class RunState(str, Enum):
    CREATED = "Created"
    READY = "Ready"
    RUNNING = "Running"
    FINISHED = "Finished"
    FAILED = "Failed"
    CANCELLED = "Cancelled"
    EXPIRED = "Expired"


class RunEvent(str, Enum):
    BIND_COMPLETE = "BindComplete"
    START = "Start"
    COMPLETE = "Complete"
    FAIL = "Fail"
    CANCEL = "Cancel"
    EXPIRE = "Expire"


#: States a run can never leave.
TERMINAL_STATES = frozenset({RunState.EXPIRED})
#: States whose only legal successor is Expired.
SEMI_TERMINAL_STATES = frozenset({RunState.FINISHED, RunState.FAILED, RunState.CANCELLED})
#: States monitoring treats as final.
MONITOR_TERMINAL_STATES = SEMI_TERMINAL_STATES | TERMINAL_STATES

_TRANSITIONS: dict[tuple[RunState, RunEvent], RunState] = {
    (RunState.CREATED, RunEvent.BIND_COMPLETE): RunState.READY,
    (RunState.READY, RunEvent.START): RunState.RUNNING,
    (RunState.RUNNING, RunEvent.COMPLETE): RunState.FINISHED,
    (RunState.RUNNING, RunEvent.FAIL): RunState.FAILED,
    (RunState.CREATED, RunEvent.CANCEL): RunState.CANCELLED,
    (RunState.READY, RunEvent.CANCEL): RunState.CANCELLED,
    (RunState.RUNNING, RunEvent.CANCEL): RunState.CANCELLED,
    (RunState.FINISHED, RunEvent.EXPIRE): RunState.EXPIRED,
    (RunState.FAILED, RunEvent.EXPIRE): RunState.EXPIRED,
    (RunState.CANCELLED, RunEvent.EXPIRE): RunState.EXPIRED,
}


def transition(state: RunState, event: RunEvent) -> RunState:
    """Return the successor state for a lifecycle event.

    Raises IllegalTransition for every (state, event) pair outside the table.
    """
    try:
        return _TRANSITIONS[(state, event)]
    except KeyError:
        raise IllegalTransition(state, event) from None


def legal_events(state: RunState) -> frozenset[RunEvent]:
    return frozenset(ev for (st, ev) in _TRANSITIONS if st is state)


def reachable_states(start: RunState) -> frozenset[RunState]:
    """All states reachable from ``start`` via one or more transitions."""
    seen: set[RunState] = set()
    frontier = [start]
    while frontier:
        current = frontier.pop()
        for (st, _), nxt in _TRANSITIONS.items():
            if st is current and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return frozenset(seen)


@dataclass(frozen=True)
class RunDescriptor:
    """A remote run's identity and lifecycle position."""

    run_id: str
    server_base: str
    state: RunState
    expiry_at: datetime
    workflow: WorkflowRef | None = None
    created_at: datetime | None = None
    started_at: datetime | None = None
    finished_at: datetime | None = None

    def check_invariants(self) -> None:
        """Assert the timestamp/state consistency rules. Raises ValueError."""
        if self.state in (RunState.CREATED, RunState.READY):
            if self.started_at is not None or self.finished_at is not None:
                raise ValueError(f"{self.state.value} run cannot carry start/finish times")
        if self.state is RunState.RUNNING:
            if self.started_at is None:
                raise ValueError("Running run must carry started_at")
            if self.finished_at is not None:
                raise ValueError("Running run cannot carry finished_at")
        if self.state in (RunState.FINISHED, RunState.FAILED):
            if self.started_at is None or self.finished_at is None:
                raise ValueError(f"{self.state.value} run must carry start and finish times")
        if self.state is RunState.CANCELLED and self.finished_at is None:
            raise ValueError("Cancelled run must carry finished_at")
        stamps = [t for t in (self.created_at, self.started_at, self.finished_at) if t is not None]
        if any(b < a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("timestamps must be non-decreasing created <= started <= finished")

    def with_state(self, state: RunState, **stamps: datetime | None) -> "RunDescriptor":
        return replace(self, state=state, **stamps)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "run_id": self.run_id,
            "state": self.state.value,
            "expiry_at": format_rfc3339(self.expiry_at),
            "workflow": self.workflow.to_json_obj() if self.workflow else None,
        }
        for name, value in (
            ("created_at", self.created_at),
            ("started_at", self.started_at),
            ("finished_at", self.finished_at),
        ):
            obj[name] = format_rfc3339(value) if value is not None else None
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any], server_base: str = "") -> "RunDescriptor":
        try:
            state = RunState(obj["state"])
            workflow_obj = obj.get("workflow")
            return cls(
                run_id=str(obj["run_id"]),
                server_base=server_base,
                state=state,
                expiry_at=parse_rfc3339(obj["expiry_at"]),
                workflow=WorkflowRef.from_json_obj(workflow_obj) if workflow_obj else None,
                created_at=_opt_ts(obj.get("created_at")),
                started_at=_opt_ts(obj.get("started_at")),
                finished_at=_opt_ts(obj.get("finished_at")),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DecodeError(f"bad run descriptor: {exc}") from exc


def _opt_ts(value: Any) -> datetime | None:
    return parse_rfc3339(value) if value else None


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OutputArtifact:
    """One output port's stored result, verifiable against its digest."""

    port: str
    depth: int
    media_type: str
    byte_size: int
    sha256: str
    remote_path: str

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "port": self.port,
            "depth": self.depth,
            "media_type": self.media_type,
            "byte_size": self.byte_size,
            "sha256": self.sha256,
            "remote_path": self.remote_path,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "OutputArtifact":
        try:
            return cls(
                port=str(obj["port"]),
                depth=int(obj["depth"]),
                media_type=str(obj["media_type"]),
                byte_size=int(obj["byte_size"]),
                sha256=str(obj["sha256"]),
                remote_path=str(obj["remote_path"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"bad output artifact: {obj!r}") from exc


@dataclass(frozen=True)
class OutputManifest:
    run_id: str
    entries: tuple[OutputArtifact, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        names = [e.port for e in self.entries]
        if len(names) != len(set(names)):
            raise ValueError("manifest entry port names must be unique")

    def entry(self, port: str) -> OutputArtifact | None:
        for e in self.entries:
            if e.port == port:
                return e
        return None

    def to_json_obj(self) -> dict[str, Any]:
        return {"run_id": self.run_id, "entries": [e.to_json_obj() for e in self.entries]}

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "OutputManifest":
        try:
            entries = tuple(OutputArtifact.from_json_obj(e) for e in obj["entries"])
            return cls(run_id=str(obj["run_id"]), entries=entries)
        except (KeyError, TypeError) as exc:
            raise DecodeError(f"bad output manifest: {exc}") from exc


# ---------------------------------------------------------------------------
# binding validation
# ---------------------------------------------------------------------------


def validate_bindings(
    ports: Iterable[PortSpec], bindings: Iterable[InputBinding]
) -> dict[str, InputBinding]:
    """Check bindings against a port set and key them by port name.

    Succeeds iff every required port has exactly one binding, every binding
    names a declared port, and no port is bound twice. All violations are
    reported together in one BindingValidationError, each list sorted by
    port name.
    """
    port_list = list(ports)
    names = [p.name for p in port_list]
    if len(names) != len(set(names)):
        raise ValueError("port names must be unique")
    declared = set(names)

    by_port: dict[str, InputBinding] = {}
    unknown: set[str] = set()
    duplicate: set[str] = set()
    for binding in bindings:
        if binding.port not in declared:
            unknown.add(binding.port)
            continue
        if binding.port in by_port:
            duplicate.add(binding.port)
            continue
        by_port[binding.port] = binding

    missing = {p.name for p in port_list if p.required and p.name not in by_port}
    if missing or unknown or duplicate:
        raise BindingValidationError(
            missing=sorted(missing), unknown=sorted(unknown), duplicate=sorted(duplicate)
        )
    return by_port

"""Local state: favourites, run history, and remembered inputs.

Layout under a data root directory:

    favourites.json               the full favourite set, one file
    runs/{run_id}/record.json     one history record per run
    runs/{run_id}/outputs/{port}  downloaded output files

All JSON files are UTF-8 with LF line endings, two-space indent, sorted
keys, and a top-level ``"schema": 1`` so a future layout change can be
told apart from corruption. Every write goes to a temp file in the same
directory, is flushed to stable storage, and is then renamed over the
target: a crash at any point leaves the old file or the new one, never a
mix. ``*.tmp`` leftovers are ignored by all readers.

Multiple readers are always safe and writers serialize through the
atomic rename, but there is no cross-process locking; this is storage
for a single user's tool, not a shared database.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import warnings
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .errors import DecodeError, NotFound, UnsupportedSchema
from .model import (
    InputBinding,
    OutputManifest,
    RunDescriptor,
    WorkflowMetadata,
    WorkflowRef,
    format_rfc3339,
    parse_rfc3339,
)

SCHEMA = 1


class StoreWarning(UserWarning):
    """A stored file was skipped because it could not be read back."""


# ---------------------------------------------------------------------------
# atomic file writes
# ---------------------------------------------------------------------------

# Failpoint for crash-safety tests. Called with ("wrote-temp", temp_path)
# once the temp file is durable and with ("replaced", path) after the
# rename. Tests swap this for a function that raises mid-save.
on_write_step: Callable[[str, Path], None] = lambda step, path: None


def _spill(fh: Any, data: bytes) -> None:
    # Split out so crash tests can interrupt a write partway through.
    fh.write(data)
    fh.flush()
    os.fsync(fh.fileno())


def write_bytes_atomic(path: Path, data: bytes) -> None:
    """Write ``data`` to ``path`` so that the file is never seen partially
    written: temp file in the same directory, fsync, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    tmp = Path(tmp_name)
    try:
        with os.fdopen(fd, "wb") as fh:
            _spill(fh, data)
        on_write_step("wrote-temp", tmp)
        os.replace(tmp, path)
        on_write_step("replaced", path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    dir_fd = os.open(path.parent, os.O_RDONLY)
    try:
        os.fsync(dir_fd)
    finally:
        os.close(dir_fd)


def dump_json(obj: Any) -> bytes:
    return (json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_json_atomic(path: Path, obj: Any) -> None:
    write_bytes_atomic(path, dump_json(obj))


def _read_json(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise NotFound(str(path)) from None
    try:
        return json.loads(text)
    except ValueError as exc:
        raise DecodeError(f"{path}: {exc}") from exc


def _check_schema(obj: Any, path: Path) -> dict[str, Any]:
    if not isinstance(obj, dict):
        raise DecodeError(f"{path}: expected a JSON object")
    if obj.get("schema") != SCHEMA:
        raise UnsupportedSchema(str(path), obj.get("schema"))
    return obj


def _safe_component(name: str) -> str:
    # Run ids and port names become path components; refuse anything that
    # could escape the data root.
    if not name or name in (".", "..") or "/" in name or "\\" in name or "\x00" in name:
        raise ValueError(f"unsafe path component {name!r}")
    return name


# ---------------------------------------------------------------------------
# stored bindings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StoredFile:
    """Identity of a file input without its content: enough to tell later
    whether some candidate file is the same bytes."""

    name: str
    sha256: str
    byte_size: int

    def matches(self, data: bytes) -> bool:
        return len(data) == self.byte_size and hashlib.sha256(data).hexdigest() == self.sha256


@dataclass(frozen=True)
class StoredBinding:
    """A persisted input binding. Inline text is kept verbatim; file
    inputs keep only (name, digest, size) so history stays small — rerun
    must find a file with the same digest or give up."""

    port: str
    inline: str | None = None
    file: StoredFile | None = None
    remote_file: str | None = None

    def __post_init__(self) -> None:
        populated = sum(v is not None for v in (self.inline, self.file, self.remote_file))
        if populated != 1:
            raise ValueError("exactly one of inline/file/remote_file must be set")

    @classmethod
    def from_binding(cls, binding: InputBinding, file_bytes: bytes | None = None) -> "StoredBinding":
        """Strip a live binding down to its persistent form. For the file
        variant the content (or a readable path) is needed once, to digest."""
        if binding.inline is not None:
            return cls(binding.port, inline=binding.inline)
        if binding.remote_file is not None:
            return cls(binding.port, remote_file=binding.remote_file)
        assert binding.file is not None
        if file_bytes is None:
            file_bytes = Path(binding.file).read_bytes()
        stored = StoredFile(
            name=str(binding.file),
            sha256=hashlib.sha256(file_bytes).hexdigest(),
            byte_size=len(file_bytes),
        )
        return cls(binding.port, file=stored)

    def to_binding(self) -> InputBinding:
        """Rebuild a submittable binding. Only inline values survive a
        round-trip unconditionally; file content must be re-located by the
        caller and remote files belong to the original run."""
        if self.inline is None:
            raise ValueError(f"stored {self.variant} binding for {self.port!r} has no content")
        return InputBinding(self.port, inline=self.inline)

    @property
    def variant(self) -> str:
        if self.inline is not None:
            return "inline"
        if self.file is not None:
            return "file"
        return "remote_file"

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"port": self.port, "variant": self.variant}
        if self.inline is not None:
            obj["value"] = self.inline
        elif self.file is not None:
            obj["name"] = self.file.name
            obj["sha256"] = self.file.sha256
            obj["byte_size"] = self.file.byte_size
        else:
            obj["name"] = self.remote_file
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "StoredBinding":
        try:
            port = str(obj["port"])
            variant = obj["variant"]
            if variant == "inline":
                return cls(port, inline=str(obj["value"]))
            if variant == "file":
                stored = StoredFile(str(obj["name"]), str(obj["sha256"]), int(obj["byte_size"]))
                return cls(port, file=stored)
            if variant == "remote_file":
                return cls(port, remote_file=str(obj["name"]))
            raise ValueError(f"unknown binding variant {variant!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"bad stored binding: {exc}") from exc


# ---------------------------------------------------------------------------
# run history
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    """Everything remembered about one run: where it lives, what went in,
    what came out, and where the downloaded files ended up."""

    descriptor: RunDescriptor
    bindings: tuple[StoredBinding, ...] = ()
    manifest: OutputManifest | None = None
    output_paths: Mapping[str, str] = field(default_factory=dict)
    note: str = ""

    def with_descriptor(self, descriptor: RunDescriptor) -> "RunRecord":
        return replace(self, descriptor=descriptor)

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "server_base": self.descriptor.server_base,
            "descriptor": self.descriptor.to_json_obj(),
            "bindings": [b.to_json_obj() for b in self.bindings],
            "manifest": self.manifest.to_json_obj() if self.manifest else None,
            "output_paths": dict(sorted(self.output_paths.items())),
            "note": self.note,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "RunRecord":
        try:
            descriptor = RunDescriptor.from_json_obj(
                obj["descriptor"], server_base=str(obj.get("server_base", ""))
            )
            manifest_obj = obj.get("manifest")
            return cls(
                descriptor=descriptor,
                bindings=tuple(StoredBinding.from_json_obj(b) for b in obj["bindings"]),
                manifest=OutputManifest.from_json_obj(manifest_obj) if manifest_obj else None,
                output_paths=dict(obj.get("output_paths", {})),
                note=str(obj.get("note", "")),
            )
        except (KeyError, TypeError) as exc:
            raise DecodeError(f"bad run record: {exc}") from exc


def runs_dir(root: Path | str) -> Path:
    return Path(root) / "runs"


def record_path(root: Path | str, run_id: str) -> Path:
    return runs_dir(root) / _safe_component(run_id) / "record.json"


def output_path(root: Path | str, run_id: str, port: str) -> Path:
    return runs_dir(root) / _safe_component(run_id) / "outputs" / _safe_component(port)


def save_record(root: Path | str, record: RunRecord) -> Path:
    path = record_path(root, record.descriptor.run_id)
    write_json_atomic(path, record.to_json_obj())
    return path


def load_record(root: Path | str, run_id: str) -> RunRecord:
    path = record_path(root, run_id)
    return RunRecord.from_json_obj(_check_schema(_read_json(path), path))


def list_history(root: Path | str) -> list[RunRecord]:
    """All readable records, newest first. Unreadable ones are skipped
    with a StoreWarning naming the file, so one bad entry cannot hide the
    rest of the history."""
    records = []
    base = runs_dir(root)
    if not base.is_dir():
        return []
    for path in sorted(base.glob("*/record.json")):
        try:
            records.append(RunRecord.from_json_obj(_check_schema(_read_json(path), path)))
        except (DecodeError, UnsupportedSchema, NotFound, OSError) as exc:
            warnings.warn(f"skipping unreadable run record {path}: {exc}", StoreWarning)
    epoch = datetime.min.replace(tzinfo=timezone.utc)
    records.sort(
        key=lambda r: (r.descriptor.created_at or epoch, r.descriptor.run_id), reverse=True
    )
    return records


def last_inputs(root: Path | str, ref: WorkflowRef) -> list[StoredBinding]:
    """Bindings of the most recent run of the given workflow version, or
    an empty list. Matches on (id, version); the repository base is not
    compared, so the same workflow fetched via a proxy still counts."""
    for record in list_history(root):
        workflow = record.descriptor.workflow
        if (
            workflow is not None
            and workflow.repository_id == ref.repository_id
            and workflow.version == ref.version
        ):
            return list(record.bindings)
    return []


def save_output(root: Path | str, run_id: str, port: str, data: bytes) -> Path:
    """Store one downloaded output file; returns where it landed."""
    path = output_path(root, run_id, port)
    write_bytes_atomic(path, data)
    return path


# ---------------------------------------------------------------------------
# favourites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Favourite:
    """A bookmarked workflow version with enough cached metadata to render
    a list entry offline."""

    ref: WorkflowRef
    cached: WorkflowMetadata
    marked_at: datetime

    def __post_init__(self) -> None:
        if (self.ref.repository_id, self.ref.version) != (
            self.cached.ref.repository_id,
            self.cached.ref.version,
        ):
            raise ValueError("favourite ref and cached metadata disagree")

    @classmethod
    def of(cls, metadata: WorkflowMetadata, marked_at: datetime) -> "Favourite":
        return cls(ref=metadata.ref, cached=metadata, marked_at=marked_at)

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "ref": self.ref.to_json_obj(),
            "cached": self.cached.to_json_obj(),
            "marked_at": format_rfc3339(self.marked_at),
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "Favourite":
        try:
            return cls(
                ref=WorkflowRef.from_json_obj(obj["ref"]),
                cached=WorkflowMetadata.from_json_obj(obj["cached"]),
                marked_at=parse_rfc3339(obj["marked_at"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"bad favourite: {exc}") from exc


def favourites_path(root: Path | str) -> Path:
    return Path(root) / "favourites.json"


def list_favourites(root: Path | str) -> list[Favourite]:
    """All favourites, most recently marked first."""
    path = favourites_path(root)
    try:
        obj = _check_schema(_read_json(path), path)
        favourites = [Favourite.from_json_obj(f) for f in obj["favourites"]]
    except NotFound:
        return []
    except (KeyError, TypeError) as exc:
        raise DecodeError(f"bad favourites file: {exc}") from exc
    favourites.sort(key=lambda f: (f.marked_at, str(f.ref)), reverse=True)
    return favourites


def _write_favourites(root: Path | str, favourites: Iterable[Favourite]) -> None:
    ordered = sorted(favourites, key=lambda f: (f.marked_at, str(f.ref)), reverse=True)
    obj = {"schema": SCHEMA, "favourites": [f.to_json_obj() for f in ordered]}
    write_json_atomic(favourites_path(root), obj)


def save_favourite(root: Path | str, fav: Favourite) -> None:
    """Add or refresh a favourite. At most one entry exists per
    (id, version); saving again replaces it."""
    key = (fav.ref.repository_id, fav.ref.version)
    kept = [
        f
        for f in list_favourites(root)
        if (f.ref.repository_id, f.ref.version) != key
    ]
    _write_favourites(root, [*kept, fav])


def remove_favourite(root: Path | str, ref: WorkflowRef) -> bool:
    """Drop a favourite; returns whether it was present."""
    favourites = list_favourites(root)
    key = (ref.repository_id, ref.version)
    kept = [f for f in favourites if (f.ref.repository_id, f.ref.version) != key]
    if len(kept) == len(favourites):
        return False
    _write_favourites(root, kept)
    return True


def is_favourite(root: Path | str, ref: WorkflowRef) -> bool:
    key = (ref.repository_id, ref.version)
    return any((f.ref.repository_id, f.ref.version) == key for f in list_favourites(root))

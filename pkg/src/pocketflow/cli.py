"""Command-line surface: search and inspect workflows, run them, watch
runs, fetch outputs, and keep local history and favourites.

Exit codes are part of the contract:

    0  success
    2  transport or protocol failure talking to a service
    3  usage error
    4  something was not found (workflow, run, record)
    5  a precondition failed (inputs missing, file content unavailable,
       outputs not ready)
    6  the run itself failed

Every subcommand accepts --json for machine-readable output on stdout;
progress and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import flowlite, store
from .config import Config, resolve_config
from .durations import parse_duration
from .errors import (
    BindFailed,
    BindingValidationError,
    DecodeError,
    DigestMismatch,
    Gone,
    IllegalState,
    NotFinished,
    NotFound,
    NotReady,
    PocketflowError,
    ProtocolError,
    Rejected,
    TransportError,
    UnsupportedSchema,
)
from .exec_client import ExecClient
from .model import (
    InputBinding,
    RunDescriptor,
    RunState,
    WorkflowRef,
    format_rfc3339,
)
from .repo_client import RepoClient
from .store import Favourite, RunRecord, StoredBinding
from .transport import Transport

EXIT_OK = 0
EXIT_TRANSPORT = 2
EXIT_USAGE = 3
EXIT_NOT_FOUND = 4
EXIT_PRECONDITION = 5
EXIT_RUN_FAILED = 6

MONITOR_TERMINAL = (RunState.FINISHED, RunState.FAILED, RunState.CANCELLED, RunState.EXPIRED)


class CliFailure(Exception):
    """A command-level failure with a message and a chosen exit code."""

    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class Session:
    """Everything a command handler needs: resolved config and lazily
    shared clients."""

    config: Config
    json_mode: bool
    _transport: Transport | None = None

    @property
    def transport(self) -> Transport:
        if self._transport is None:
            self._transport = Transport()
        return self._transport

    @property
    def repo(self) -> RepoClient:
        return RepoClient(self.config.repo_base, self.transport)

    @property
    def execs(self) -> ExecClient:
        return ExecClient(self.config.exec_base, self.transport)

    @property
    def root(self) -> Path:
        return self.config.data_root

    def emit(self, obj, text: str | None = None) -> None:
        """Print the machine form under --json, else the human form."""
        if self.json_mode:
            print(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True))
        elif text:
            print(text)

    def say(self, message: str) -> None:
        print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


def parse_ref(text: str, session: Session) -> WorkflowRef:
    """ID@VERSION, e.g. 2659@5."""
    workflow_id, sep, version = text.partition("@")
    if not sep or not workflow_id or not version.isdigit():
        raise CliFailure(f"expected ID@VERSION, got {text!r}", EXIT_USAGE)
    return WorkflowRef(workflow_id, int(version), session.config.repo_base)


def looks_like_ref(text: str) -> bool:
    workflow_id, sep, version = text.partition("@")
    return bool(sep) and bool(workflow_id) and version.isdigit() and "/" not in workflow_id


def _parse_port_assignments(pairs: list[str], flag: str) -> list[tuple[str, str]]:
    out = []
    for pair in pairs:
        port, sep, value = pair.partition("=")
        if not sep or not port:
            raise CliFailure(f"{flag} wants PORT=VALUE, got {pair!r}", EXIT_USAGE)
        out.append((port, value))
    return out


def _stamp(value) -> str:
    return format_rfc3339(value) if value else "-"


def render_descriptor(d: RunDescriptor) -> str:
    lines = [
        f"run: {d.run_id}",
        f"state: {d.state.value}",
        f"workflow: {d.workflow if d.workflow else '-'}",
        f"created: {_stamp(d.created_at)}  started: {_stamp(d.started_at)}  "
        f"finished: {_stamp(d.finished_at)}",
        f"expires: {_stamp(d.expiry_at)}",
    ]
    return "\n".join(lines)


def _render_table(rows: list[list[str]], header: list[str]) -> str:
    table = [header, *rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    return "\n".join(lines)


def _refresh_record(session: Session, descriptor: RunDescriptor) -> RunRecord | None:
    """Keep the stored history in step with what the server just said."""
    try:
        record = store.load_record(session.root, descriptor.run_id)
    except (NotFound, ValueError):
        return None
    updated = record.with_descriptor(descriptor)
    if updated != record:
        store.save_record(session.root, updated)
    return updated


# ---------------------------------------------------------------------------
# search / show / fav
# ---------------------------------------------------------------------------


def cmd_search(args, session: Session) -> int:
    try:
        page = session.repo.search(args.text, page=args.page, per_page=args.per_page)
    except ValueError as exc:
        raise CliFailure(str(exc), EXIT_USAGE) from exc
    if session.json_mode:
        session.emit(
            {
                "total": page.total,
                "page": page.page,
                "per_page": page.per_page,
                "items": [m.to_json_obj() for m in page.items],
            }
        )
        return EXIT_OK
    if not page.items:
        print("no results")
        return EXIT_OK
    rows = [
        [m.ref.repository_id, str(m.ref.version), m.title, m.uploader, f"{m.rating:.1f}"]
        for m in page.items
    ]
    print(_render_table(rows, ["ID", "VER", "TITLE", "UPLOADER", "RATING"]))
    if page.total > len(page.items):
        session.say(f"showing {len(page.items)} of {page.total}; use --page/--per-page")
    return EXIT_OK


def _fetch_diagram_to_temp(session: Session, ref: WorkflowRef) -> Path:
    data, content_type = session.repo.fetch_diagram(ref.repository_id, ref.version)
    suffix = ".svg" if "svg" in content_type else ".png" if "png" in content_type else ".bin"
    fd, name = tempfile.mkstemp(prefix=f"workflow-{ref.repository_id}-{ref.version}-", suffix=suffix)
    os.close(fd)
    Path(name).write_bytes(data)
    return Path(name)


def cmd_show(args, session: Session) -> int:
    ref = parse_ref(args.ref, session)
    meta = session.repo.fetch_metadata(ref.repository_id, ref.version)
    diagram = _fetch_diagram_to_temp(session, ref)
    if session.json_mode:
        session.emit({"metadata": meta.to_json_obj(), "diagram": str(diagram)})
        return EXIT_OK
    print(f"{meta.title}  ({meta.ref})")
    print(f"uploader: {meta.uploader}   rating: {meta.rating:.1f}   license: {meta.license}")
    print(f"format: {meta.format_tag.value}")
    print()
    print(meta.description)
    print()
    print(f"diagram: {diagram}")
    return EXIT_OK


def cmd_fav(args, session: Session) -> int:
    if args.action == "list":
        favourites = store.list_favourites(session.root)
        if session.json_mode:
            session.emit({"favourites": [f.to_json_obj() for f in favourites]})
        elif not favourites:
            print("no favourites")
        else:
            rows = [
                [str(f.ref), f"{f.cached.rating:.1f}", f.cached.title, f.cached.uploader]
                for f in favourites
            ]
            print(_render_table(rows, ["REF", "RATING", "TITLE", "UPLOADER"]))
        return EXIT_OK

    ref = parse_ref(args.ref, session)
    if args.action == "add":
        meta = session.repo.fetch_metadata(ref.repository_id, ref.version)
        store.save_favourite(session.root, Favourite.of(meta, marked_at=_now()))
        session.emit({"favourited": str(meta.ref)}, f"favourited {meta.ref}: {meta.title}")
        return EXIT_OK
    removed = store.remove_favourite(session.root, ref)
    session.emit(
        {"removed": str(ref), "was_favourite": removed},
        f"removed {ref}" if removed else f"{ref} is not a favourite",
    )
    return EXIT_OK


def _now() -> datetime:
    return datetime.now(tz=timezone.utc)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _load_definition(source: str, session: Session) -> tuple[bytes, str, WorkflowRef | None]:
    """A run source is a repository ref or a local definition file."""
    if looks_like_ref(source):
        ref = parse_ref(source, session)
        data, format_tag = session.repo.fetch_definition(ref.repository_id, ref.version)
        return data, format_tag, ref
    path = Path(source)
    if not path.is_file():
        raise CliFailure(f"no such workflow ref or file: {source}", EXIT_NOT_FOUND)
    return path.read_bytes(), "flowlite", None


def _gather_bindings(
    args, definition: bytes, format_tag: str, session: Session
) -> tuple[list[InputBinding], dict[str, bytes], list[StoredBinding]]:
    """Flags (plus an interactive prompt when appropriate) to bindings.

    Returns the live bindings, the content of file inputs keyed by port,
    and the persistent forms for the history record.
    """
    live: dict[str, InputBinding] = {}
    file_bytes: dict[str, bytes] = {}
    stored: list[StoredBinding] = []

    for port, value in _parse_port_assignments(args.input or [], "--input"):
        live[port] = InputBinding(port, inline=value)
    for port, path_text in _parse_port_assignments(args.input_file or [], "--input-file"):
        path = Path(path_text)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise CliFailure(f"cannot read {path}: {exc}", EXIT_PRECONDITION) from exc
        live[port] = InputBinding(port, file=path)
        file_bytes[port] = data

    # With a parseable definition the input set is known client-side, so
    # missing ports are caught (or prompted for) before anything is created.
    if format_tag == "flowlite":
        graph = flowlite.parse(definition)
        declared = {p.name for p in graph.inputs}
        missing = sorted(declared - set(live))
        unknown = sorted(set(live) - declared)
        if unknown:
            raise CliFailure(f"unknown input ports: {', '.join(unknown)}", EXIT_USAGE)
        if missing and sys.stdin.isatty():
            for port in missing:
                value = input(f"{port}> ")
                live[port] = InputBinding(port, inline=value)
            missing = []
        if missing:
            raise CliFailure(f"missing inputs: {', '.join(missing)}", EXIT_PRECONDITION)

    for port in sorted(live):
        binding = live[port]
        stored.append(StoredBinding.from_binding(binding, file_bytes.get(port)))
    return [live[p] for p in sorted(live)], file_bytes, stored


def _submit(
    session: Session,
    definition: bytes,
    format_tag: str,
    workflow: WorkflowRef | None,
    bindings: list[InputBinding],
    file_bytes: dict[str, bytes],
    stored: list[StoredBinding],
) -> RunDescriptor:
    """Create, feed, and start a run; record it in history."""
    run = session.execs.create_run(definition, definition_format=format_tag, workflow=workflow)
    used_names: set[str] = set()
    try:
        for binding in bindings:
            if binding.file is not None:
                name = Path(binding.file).name
                if name in used_names:
                    name = f"{binding.port}-{name}"
                used_names.add(name)
                session.execs.upload_file(run, name, file_bytes[binding.port])
                session.execs.set_input(run, InputBinding(binding.port, remote_file=name))
            else:
                session.execs.set_input(run, binding)
        descriptor = session.execs.start(run)
    except NotReady as exc:
        raise CliFailure(f"missing inputs: {', '.join(exc.missing)}", EXIT_PRECONDITION) from exc
    store.save_record(
        session.root, RunRecord(descriptor=descriptor, bindings=tuple(stored))
    )
    return descriptor


def _download_outputs(session: Session, descriptor: RunDescriptor) -> RunRecord:
    """Fetch, verify, and store every output; returns the updated record."""
    manifest = session.execs.fetch_outputs(descriptor.run_id)
    paths: dict[str, str] = {}
    for entry in manifest.entries:
        data, _ = session.execs.fetch_output_bytes(descriptor.run_id, entry.port, manifest)
        paths[entry.port] = str(store.save_output(session.root, descriptor.run_id, entry.port, data))
    try:
        record = store.load_record(session.root, descriptor.run_id)
    except NotFound:
        record = RunRecord(descriptor=descriptor)
    record = RunRecord(
        descriptor=descriptor,
        bindings=record.bindings,
        manifest=manifest,
        output_paths=paths,
        note=record.note,
    )
    store.save_record(session.root, record)
    return record


def _wait_and_collect(session: Session, descriptor: RunDescriptor, deadline: float | None) -> int:
    """Monitor to a terminal state, then download what there is to download."""

    def observe(d: RunDescriptor) -> None:
        session.say(f"state: {d.state.value}")

    final = session.execs.monitor(
        descriptor.run_id,
        observer=observe,
        deadline=deadline,
        initial_interval=session.config.poll_initial,
        backoff_factor=session.config.poll_backoff,
        max_interval=session.config.poll_max,
    )
    _refresh_record(session, final)

    if final.state is RunState.EXPIRED:
        session.emit({"run": final.to_json_obj()}, render_descriptor(final))
        return EXIT_OK

    record = _download_outputs(session, final)

    if final.state is RunState.FAILED:
        error_path = record.output_paths.get("error")
        diagnostic = Path(error_path).read_text(encoding="utf-8") if error_path else "(no diagnostic)"
        session.say(f"run failed: {diagnostic}")
        session.emit({"run": final.to_json_obj(), "error": diagnostic})
        return EXIT_RUN_FAILED

    lines = [f"{port}: {path}" for port, path in sorted(record.output_paths.items())]
    session.emit(
        {"run": final.to_json_obj(), "outputs": dict(sorted(record.output_paths.items()))},
        "\n".join([render_descriptor(final), *lines]),
    )
    return EXIT_OK


def cmd_run(args, session: Session) -> int:
    definition, format_tag, workflow = _load_definition(args.source, session)
    bindings, file_bytes, stored = _gather_bindings(args, definition, format_tag, session)
    descriptor = _submit(session, definition, format_tag, workflow, bindings, file_bytes, stored)
    if not args.wait:
        session.emit({"run": descriptor.to_json_obj()}, descriptor.run_id)
        return EXIT_OK
    session.say(f"run: {descriptor.run_id}")
    return _wait_and_collect(session, descriptor, args.deadline)


def _bindings_for_rerun(stored: list[StoredBinding]) -> tuple[list[InputBinding], dict[str, bytes]]:
    """Stored bindings back to live ones; fails when content is gone."""
    live: list[InputBinding] = []
    file_bytes: dict[str, bytes] = {}
    unavailable: list[str] = []
    for binding in stored:
        if binding.inline is not None:
            live.append(InputBinding(binding.port, inline=binding.inline))
            continue
        if binding.file is not None:
            path = Path(binding.file.name)
            try:
                data = path.read_bytes()
            except OSError:
                unavailable.append(f"{binding.port} ({binding.file.name}: missing)")
                continue
            if not binding.file.matches(data):
                unavailable.append(f"{binding.port} ({binding.file.name}: content changed)")
                continue
            live.append(InputBinding(binding.port, file=path))
            file_bytes[binding.port] = data
            continue
        unavailable.append(f"{binding.port} (uploaded file {binding.remote_file!r} not kept)")
    if unavailable:
        raise CliFailure(
            "file inputs unavailable: " + "; ".join(unavailable), EXIT_PRECONDITION
        )
    return live, file_bytes


def cmd_rerun(args, session: Session) -> int:
    if looks_like_ref(args.target):
        ref = parse_ref(args.target, session)
        stored = store.last_inputs(session.root, ref)
        if not stored:
            raise CliFailure(f"no recorded run of {ref}", EXIT_NOT_FOUND)
    else:
        record = store.load_record(session.root, args.target)  # NotFound -> exit 4
        if record.descriptor.workflow is None:
            raise CliFailure(
                "recorded run has no workflow reference to resubmit", EXIT_PRECONDITION
            )
        ref = record.descriptor.workflow
        stored = list(record.bindings)

    definition, format_tag = session.repo.fetch_definition(ref.repository_id, ref.version)
    bindings, file_bytes = _bindings_for_rerun(stored)
    descriptor = _submit(session, definition, format_tag, ref, bindings, file_bytes, stored)
    if args.no_wait:
        session.emit({"run": descriptor.to_json_obj()}, descriptor.run_id)
        return EXIT_OK
    session.say(f"run: {descriptor.run_id}")
    return _wait_and_collect(session, descriptor, args.deadline)


# ---------------------------------------------------------------------------
# watching and fetching
# ---------------------------------------------------------------------------


def cmd_status(args, session: Session) -> int:
    try:
        descriptor = session.execs.poll_status(args.run_id)
    except Gone as exc:
        if exc.descriptor is None:
            raise
        descriptor = exc.descriptor
        session.say("run is gone from the server; last known state follows")
    _refresh_record(session, descriptor)
    session.emit({"run": descriptor.to_json_obj()}, render_descriptor(descriptor))
    return EXIT_OK


def cmd_attach(args, session: Session) -> int:
    known = {r.descriptor.run_id for r in store.list_history(session.root)}
    if args.run_id:
        candidates = [session.execs.poll_status(args.run_id)]
    else:
        candidates = [d for d in session.execs.list_runs() if d.run_id not in known]

    if not args.run_id and not args.all:
        # Pure listing: nothing is adopted until the user picks.
        session.emit(
            {"candidates": [d.to_json_obj() for d in candidates]},
            "\n".join(f"{d.run_id}  {d.state.value}" for d in candidates) or "nothing to attach",
        )
        return EXIT_OK

    adopted: list[RunDescriptor] = []
    for descriptor in candidates:
        if descriptor.run_id in known:
            _refresh_record(session, descriptor)
            session.say(f"{descriptor.run_id} already tracked; refreshed")
            continue
        store.save_record(session.root, RunRecord(descriptor=descriptor))
        adopted.append(descriptor)

    finals = []
    for descriptor in adopted:
        if descriptor.state not in MONITOR_TERMINAL:
            session.say(f"monitoring {descriptor.run_id}")
            descriptor = session.execs.monitor(
                descriptor.run_id,
                observer=lambda d: session.say(f"state: {d.state.value}"),
                deadline=args.deadline,
                initial_interval=session.config.poll_initial,
                backoff_factor=session.config.poll_backoff,
                max_interval=session.config.poll_max,
            )
            _refresh_record(session, descriptor)
        finals.append(descriptor)

    session.emit(
        {"adopted": [d.to_json_obj() for d in finals]},
        "\n".join(f"adopted {d.run_id}  {d.state.value}" for d in finals) or "nothing to attach",
    )
    return EXIT_OK


def cmd_outputs(args, session: Session) -> int:
    descriptor = session.execs.poll_status(args.run_id)
    record = _download_outputs(session, descriptor)
    session.emit(
        {"outputs": dict(sorted(record.output_paths.items())),
         "manifest": record.manifest.to_json_obj() if record.manifest else None},
        "\n".join(f"{port}: {path}" for port, path in sorted(record.output_paths.items()))
        or "no outputs",
    )
    return EXIT_OK


def cmd_history(args, session: Session) -> int:
    records = store.list_history(session.root)
    if session.json_mode:
        session.emit({"runs": [r.to_json_obj() for r in records]})
        return EXIT_OK
    if not records:
        print("no runs yet")
        return EXIT_OK
    rows = []
    for r in records:
        d = r.descriptor
        rows.append(
            [
                d.run_id,
                d.state.value,
                str(d.workflow) if d.workflow else "-",
                _stamp(d.created_at),
                r.note,
            ]
        )
    print(_render_table(rows, ["RUN", "STATE", "WORKFLOW", "CREATED", "NOTE"]))
    return EXIT_OK


def cmd_serve(args, session: Session) -> int:
    from .gateway import serve_gateway

    return serve_gateway(session.config, args.bind, json_mode=session.json_mode)


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage, but 2 means transport failure here.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _duration_flag(text: str) -> float:
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pocketflow",
        description="Find workflows, run them on an execution service, keep the results.",
    )
    parser.add_argument("--repo", help="repository service base URI")
    parser.add_argument("--exec", dest="exec_base", help="execution service base URI")
    parser.add_argument("--data-root", help="directory for history, favourites, outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_json(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = with_json(sub.add_parser("search", help="search the workflow repository"))
    p.add_argument("text", nargs="?", default="")
    p.add_argument("--page", type=int, default=1)
    p.add_argument("--per-page", type=int, default=20)
    p.set_defaults(handler=cmd_search)

    p = with_json(sub.add_parser("show", help="metadata and diagram for ID@VERSION"))
    p.add_argument("ref")
    p.set_defaults(handler=cmd_show)

    p = with_json(sub.add_parser("fav", help="manage favourites"))
    p.add_argument("action", choices=["add", "rm", "list"])
    p.add_argument("ref", nargs="?")
    p.set_defaults(handler=cmd_fav)

    p = with_json(sub.add_parser("run", help="run ID@VERSION or a local definition file"))
    p.add_argument("source")
    p.add_argument("--input", action="append", metavar="PORT=VALUE")
    p.add_argument("--input-file", action="append", metavar="PORT=PATH")
    p.add_argument("--wait", action="store_true", help="monitor and download outputs")
    p.add_argument("--deadline", type=_duration_flag, default=None, metavar="DURATION")
    p.set_defaults(handler=cmd_run)

    p = with_json(sub.add_parser("rerun", help="repeat a run with its recorded inputs"))
    p.add_argument("target", metavar="RUN_ID|ID@VERSION")
    p.add_argument("--no-wait", action="store_true", help="submit without monitoring")
    p.add_argument("--deadline", type=_duration_flag, default=None, metavar="DURATION")
    p.set_defaults(handler=cmd_rerun)

    p = with_json(sub.add_parser("status", help="current state of a run"))
    p.add_argument("run_id")
    p.set_defaults(handler=cmd_status)

    p = with_json(sub.add_parser("attach", help="adopt runs started elsewhere"))
    p.add_argument("run_id", nargs="?")
    p.add_argument("--all", action="store_true", help="adopt every unknown server run")
    p.add_argument("--deadline", type=_duration_flag, default=None, metavar="DURATION")
    p.set_defaults(handler=cmd_attach)

    p = with_json(sub.add_parser("outputs", help="download and verify a run's outputs"))
    p.add_argument("run_id")
    p.set_defaults(handler=cmd_outputs)

    p = with_json(sub.add_parser("history", help="locally recorded runs, newest first"))
    p.set_defaults(handler=cmd_history)

    p = with_json(sub.add_parser("serve", help="serve the web UI and its API"))
    p.add_argument("--bind", default="127.0.0.1:8642", metavar="HOST:PORT")
    p.set_defaults(handler=cmd_serve)

    return parser


def _checked_args(args) -> None:
    if getattr(args, "command", None) == "fav" and args.action != "list" and not args.ref:
        raise CliFailure("fav add/rm needs ID@VERSION", EXIT_USAGE)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        _checked_args(args)
        config = resolve_config(
            repo_flag=args.repo, exec_flag=args.exec_base, data_flag=args.data_root
        )
        session = Session(config=config, json_mode=getattr(args, "json", False))
        return args.handler(args, session)
    except CliFailure as exc:
        print(f"pocketflow: {exc}", file=sys.stderr)
        return exc.code
    except (NotFound, Gone) as exc:
        print(f"pocketflow: not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (NotReady, NotFinished, IllegalState, BindingValidationError) as exc:
        print(f"pocketflow: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (TransportError, ProtocolError, DecodeError, Rejected, DigestMismatch,
            UnsupportedSchema, BindFailed) as exc:
        print(f"pocketflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except ValueError as exc:
        print(f"pocketflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except PocketflowError as exc:
        print(f"pocketflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

"""Local persistence: atomic writes, history, favourites, crash safety."""

import hashlib
import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pocketflow import store
from pocketflow.errors import DecodeError, NotFound, UnsupportedSchema
from pocketflow.model import (
    InputBinding,
    OutputArtifact,
    OutputManifest,
    RunDescriptor,
    RunState,
    WorkflowFormat,
    WorkflowMetadata,
    WorkflowRef,
)
from pocketflow.store import (
    Favourite,
    RunRecord,
    StoredBinding,
    StoredFile,
    last_inputs,
    list_favourites,
    list_history,
    load_record,
    record_path,
    remove_favourite,
    save_favourite,
    save_output,
    save_record,
)

T0 = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

GI_REF = WorkflowRef("2659", 5, "http://repo.example")


def make_descriptor(run_id="run-1", state=RunState.FINISHED, created=T0, workflow=GI_REF):
    started = finished = None
    if state in (RunState.RUNNING, RunState.FINISHED, RunState.FAILED):
        started = created + timedelta(seconds=1)
    if state in (RunState.FINISHED, RunState.FAILED, RunState.CANCELLED, RunState.EXPIRED):
        finished = created + timedelta(seconds=5)
    d = RunDescriptor(
        run_id=run_id,
        server_base="http://exec.example",
        state=state,
        expiry_at=created + timedelta(hours=24),
        workflow=workflow,
        created_at=created,
        started_at=started,
        finished_at=finished,
    )
    d.check_invariants()
    return d


def make_metadata(ref=GI_REF, title="NCBI Gi to Kegg Pathway Descriptions"):
    return WorkflowMetadata(
        ref=ref,
        title=title,
        uploader="Paul Fisher",
        description="Pathways for a gene identifier",
        rating=4.5,
        diagram_uri=f"{ref.source_base}/workflows/{ref.repository_id}/versions/{ref.version}/diagram",
        definition_uri=f"{ref.source_base}/workflows/{ref.repository_id}/versions/{ref.version}/definition",
        license="by-sa",
        format_tag=WorkflowFormat.FLOWLITE,
    )


def make_record(run_id="run-1", created=T0, workflow=GI_REF, **kwargs):
    defaults = dict(
        bindings=(StoredBinding("gi", inline="84579909"),),
        manifest=OutputManifest(
            run_id=run_id,
            entries=(
                OutputArtifact(
                    port="pathways",
                    depth=1,
                    media_type="text/plain; charset=utf-8",
                    byte_size=92,
                    sha256="ab" * 32,
                    remote_path=f"/runs/{run_id}/outputs/pathways",
                ),
            ),
        ),
        output_paths={"pathways": f"/data/runs/{run_id}/outputs/pathways"},
        note="",
    )
    defaults.update(kwargs)
    return RunRecord(
        descriptor=make_descriptor(run_id=run_id, created=created, workflow=workflow), **defaults
    )


# -- stored bindings ---------------------------------------------------------------


def test_stored_binding_from_inline_and_remote():
    inline = StoredBinding.from_binding(InputBinding("gi", inline="84579909"))
    assert inline.variant == "inline" and inline.to_binding() == InputBinding("gi", inline="84579909")

    remote = StoredBinding.from_binding(InputBinding("seq", remote_file="reads.fa"))
    assert remote.variant == "remote_file" and remote.remote_file == "reads.fa"


def test_stored_binding_from_file_digests_content(tmp_path):
    payload = b"ACGT" * 5
    source = tmp_path / "reads.fa"
    source.write_bytes(payload)

    from_path = StoredBinding.from_binding(InputBinding("seq", file=source))
    from_bytes = StoredBinding.from_binding(InputBinding("seq", file=source), file_bytes=payload)
    assert from_path == from_bytes
    assert from_path.file == StoredFile(str(source), hashlib.sha256(payload).hexdigest(), 20)
    assert from_path.file.matches(payload)
    assert not from_path.file.matches(payload + b"!")


def test_stored_binding_only_inline_rebuilds():
    with pytest.raises(ValueError, match="no content"):
        StoredBinding("seq", file=StoredFile("x", "0" * 64, 1)).to_binding()
    with pytest.raises(ValueError, match="no content"):
        StoredBinding("seq", remote_file="x").to_binding()


def test_stored_binding_json_roundtrip():
    bindings = [
        StoredBinding("gi", inline="84579909"),
        StoredBinding("seq", file=StoredFile("reads.fa", "0" * 64, 17)),
        StoredBinding("db", remote_file="lookup.tsv"),
    ]
    for b in bindings:
        assert StoredBinding.from_json_obj(b.to_json_obj()) == b
    with pytest.raises(DecodeError):
        StoredBinding.from_json_obj({"port": "x", "variant": "carrier-pigeon"})
    with pytest.raises(DecodeError):
        StoredBinding.from_json_obj({"port": "x", "variant": "inline"})


# -- run records -------------------------------------------------------------------


def test_record_save_load_roundtrip(tmp_path):
    record = make_record()
    save_record(tmp_path, record)
    assert load_record(tmp_path, "run-1") == record


def test_record_file_is_byte_stable(tmp_path):
    save_record(tmp_path, make_record())
    path = record_path(tmp_path, "run-1")
    first = path.read_bytes()

    save_record(tmp_path, load_record(tmp_path, "run-1"))
    assert path.read_bytes() == first


def test_record_file_shape(tmp_path):
    save_record(tmp_path, make_record(note="demo"))
    raw = record_path(tmp_path, "run-1").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert raw.startswith(b"{\n  ")

    obj = json.loads(raw)
    assert obj["schema"] == 1
    assert list(obj) == sorted(obj)
    assert obj["note"] == "demo"
    assert obj["descriptor"]["workflow"]["id"] == "2659"
    file_variants = [b for b in obj["bindings"] if b["variant"] == "inline"]
    assert file_variants == [{"port": "gi", "value": "84579909", "variant": "inline"}]


def test_record_resave_replaces(tmp_path):
    save_record(tmp_path, make_record(note="first"))
    save_record(tmp_path, make_record(note="second"))
    assert load_record(tmp_path, "run-1").note == "second"
    assert len(list_history(tmp_path)) == 1


def test_load_unknown_run_is_not_found(tmp_path):
    with pytest.raises(NotFound):
        load_record(tmp_path, "no-such-run")


def test_unknown_schema_is_distinct_error(tmp_path):
    record = make_record()
    save_record(tmp_path, record)
    path = record_path(tmp_path, "run-1")
    obj = json.loads(path.read_bytes())
    obj["schema"] = 99
    path.write_text(json.dumps(obj), encoding="utf-8")

    with pytest.raises(UnsupportedSchema) as exc_info:
        load_record(tmp_path, "run-1")
    assert exc_info.value.found == 99


def test_unwritable_root_leaves_no_partial_file(tmp_path):
    # A plain file where the runs directory should go makes every mkdir
    # fail, whoever we run as.
    (tmp_path / "runs").write_text("in the way")
    with pytest.raises(OSError):
        save_record(tmp_path, make_record())
    assert list(tmp_path.glob("**/*.tmp")) == []


def test_unsafe_run_ids_rejected(tmp_path):
    for bad in ["", ".", "..", "a/b", "a\\b", "x\x00y"]:
        with pytest.raises(ValueError):
            record_path(tmp_path, bad)


# -- history listing ---------------------------------------------------------------


def test_history_newest_first(tmp_path):
    for i in range(3):
        save_record(tmp_path, make_record(run_id=f"run-{i}", created=T0 + timedelta(minutes=i)))
    assert [r.descriptor.run_id for r in list_history(tmp_path)] == ["run-2", "run-1", "run-0"]


def test_history_skips_corrupt_with_warning(tmp_path):
    for i in range(3):
        save_record(tmp_path, make_record(run_id=f"run-{i}", created=T0 + timedelta(minutes=i)))
    broken = record_path(tmp_path, "run-1")
    broken.write_bytes(broken.read_bytes()[:40])

    with pytest.warns(store.StoreWarning, match="run-1"):
        records = list_history(tmp_path)
    assert [r.descriptor.run_id for r in records] == ["run-2", "run-0"]


def test_history_ignores_temp_files_and_stray_dirs(tmp_path):
    save_record(tmp_path, make_record())
    run_dir = record_path(tmp_path, "run-1").parent
    (run_dir / "record.json.abc.tmp").write_text("{ partial")
    (tmp_path / "runs" / "empty-run").mkdir()

    assert [r.descriptor.run_id for r in list_history(tmp_path)] == ["run-1"]


def test_history_of_empty_root(tmp_path):
    assert list_history(tmp_path) == []


def test_history_sorts_missing_created_at_last(tmp_path):
    save_record(tmp_path, make_record(run_id="dated"))
    undated = RunRecord(
        descriptor=RunDescriptor(
            run_id="undated",
            server_base="http://exec.example",
            state=RunState.CREATED,
            expiry_at=T0 + timedelta(hours=24),
        )
    )
    save_record(tmp_path, undated)
    assert [r.descriptor.run_id for r in list_history(tmp_path)] == ["dated", "undated"]


# -- last inputs -------------------------------------------------------------------


def test_last_inputs_returns_most_recent_bindings(tmp_path):
    save_record(
        tmp_path,
        make_record(run_id="old", created=T0, bindings=(StoredBinding("gi", inline="111"),)),
    )
    save_record(
        tmp_path,
        make_record(
            run_id="new",
            created=T0 + timedelta(hours=1),
            bindings=(StoredBinding("gi", inline="84579909"),),
        ),
    )
    assert last_inputs(tmp_path, GI_REF) == [StoredBinding("gi", inline="84579909")]


def test_last_inputs_empty_when_never_run(tmp_path):
    save_record(tmp_path, make_record())
    assert last_inputs(tmp_path, WorkflowRef("74", 4, "http://repo.example")) == []
    assert last_inputs(tmp_path, WorkflowRef("2659", 4, "http://repo.example")) == []


def test_last_inputs_ignores_repository_base(tmp_path):
    save_record(tmp_path, make_record(workflow=WorkflowRef("2659", 5, "http://mirror.example")))
    assert last_inputs(tmp_path, GI_REF) == [StoredBinding("gi", inline="84579909")]


def test_last_inputs_skips_runs_without_workflow(tmp_path):
    save_record(tmp_path, make_record(run_id="anon", workflow=None))
    assert last_inputs(tmp_path, GI_REF) == []


# -- output files ------------------------------------------------------------------


def test_save_output_places_file_under_run(tmp_path):
    path = save_output(tmp_path, "run-1", "pathways", b"path:hsa00564\n")
    assert path == tmp_path / "runs" / "run-1" / "outputs" / "pathways"
    assert path.read_bytes() == b"path:hsa00564\n"

    with pytest.raises(ValueError):
        save_output(tmp_path, "run-1", "../escape", b"x")


# -- favourites --------------------------------------------------------------------


def test_favourite_save_and_list(tmp_path):
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0))
    favourites = list_favourites(tmp_path)
    assert len(favourites) == 1
    assert favourites[0].cached.title == "NCBI Gi to Kegg Pathway Descriptions"
    assert store.is_favourite(tmp_path, GI_REF)


def test_favourite_is_unique_per_version(tmp_path):
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0))
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0 + timedelta(days=1)))
    favourites = list_favourites(tmp_path)
    assert len(favourites) == 1
    assert favourites[0].marked_at == T0 + timedelta(days=1)


def test_favourites_ordered_by_marked_at_desc(tmp_path):
    other = make_metadata(ref=WorkflowRef("74", 4, "http://repo.example"), title="BioAID")
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0))
    save_favourite(tmp_path, Favourite.of(other, marked_at=T0 + timedelta(hours=2)))
    assert [str(f.ref) for f in list_favourites(tmp_path)] == ["74@4", "2659@5"]


def test_remove_favourite_flags_presence(tmp_path):
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0))
    assert remove_favourite(tmp_path, GI_REF) is True
    assert remove_favourite(tmp_path, GI_REF) is False
    assert list_favourites(tmp_path) == []
    assert not store.is_favourite(tmp_path, GI_REF)


def test_favourite_ref_must_match_cached(tmp_path):
    with pytest.raises(ValueError, match="disagree"):
        Favourite(
            ref=WorkflowRef("74", 4, "http://repo.example"),
            cached=make_metadata(),
            marked_at=T0,
        )


def test_favourites_unknown_schema(tmp_path):
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0))
    path = store.favourites_path(tmp_path)
    obj = json.loads(path.read_bytes())
    obj["schema"] = 2
    path.write_text(json.dumps(obj), encoding="utf-8")
    with pytest.raises(UnsupportedSchema):
        list_favourites(tmp_path)


def test_favourites_file_byte_stable(tmp_path):
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0))
    path = store.favourites_path(tmp_path)
    first = path.read_bytes()
    _ = list_favourites(tmp_path)
    save_favourite(tmp_path, list_favourites(tmp_path)[0])
    assert path.read_bytes() == first


# -- crash safety ------------------------------------------------------------------


class InjectedCrash(BaseException):
    """Stands in for the process dying mid-save. BaseException so no
    except-Exception handler in the code under test can swallow it."""


def test_crash_at_any_write_point_leaves_old_or_new(tmp_path, monkeypatch):
    """Kill the save at every byte offset of the payload and at both
    rename-point hooks; the record file must always hold exactly the old
    or exactly the new content."""
    old = make_record(note="old")
    new = make_record(note="new-" + "x" * 50)
    save_record(tmp_path, old)
    path = record_path(tmp_path, "run-1")
    old_bytes = path.read_bytes()
    new_bytes = store.dump_json(new.to_json_obj())

    real_spill = store._spill

    def crash_after(limit):
        def spill(fh, data):
            real_spill(fh, data[:limit])
            raise InjectedCrash

        return spill

    offsets = sorted(set(range(0, len(new_bytes) + 1, 7)) | {0, 1, len(new_bytes)})
    for limit in offsets:
        monkeypatch.setattr(store, "_spill", crash_after(limit))
        with pytest.raises(InjectedCrash):
            save_record(tmp_path, new)
        monkeypatch.setattr(store, "_spill", real_spill)
        assert path.read_bytes() == old_bytes, f"hybrid file after crash at byte {limit}"
        assert load_record(tmp_path, "run-1") == old

    # Crash after the temp file is durable but before the rename: old wins.
    def crash_before_rename(step, p):
        if step == "wrote-temp":
            raise InjectedCrash

    monkeypatch.setattr(store, "on_write_step", crash_before_rename)
    with pytest.raises(InjectedCrash):
        save_record(tmp_path, new)
    monkeypatch.setattr(store, "on_write_step", lambda step, p: None)
    assert path.read_bytes() == old_bytes

    # Crash after the rename: the commit point has passed, new wins.
    def crash_after_rename(step, p):
        if step == "replaced":
            raise InjectedCrash

    monkeypatch.setattr(store, "on_write_step", crash_after_rename)
    with pytest.raises(InjectedCrash):
        save_record(tmp_path, new)
    monkeypatch.setattr(store, "on_write_step", lambda step, p: None)
    assert path.read_bytes() == new_bytes
    assert load_record(tmp_path, "run-1") == new

    assert list(path.parent.glob("*.tmp")) == []


def test_crashed_favourites_write_keeps_old_set(tmp_path, monkeypatch):
    save_favourite(tmp_path, Favourite.of(make_metadata(), marked_at=T0))
    before = store.favourites_path(tmp_path).read_bytes()

    def crash(step, p):
        raise InjectedCrash

    monkeypatch.setattr(store, "on_write_step", crash)
    other = make_metadata(ref=WorkflowRef("74", 4, "http://repo.example"), title="BioAID")
    with pytest.raises(InjectedCrash):
        save_favourite(tmp_path, Favourite.of(other, marked_at=T0))
    monkeypatch.setattr(store, "on_write_step", lambda step, p: None)

    assert store.favourites_path(tmp_path).read_bytes() == before
    assert [str(f.ref) for f in list_favourites(tmp_path)] == ["2659@5"]


# -- property: records round-trip --------------------------------------------------

notes = st.text(max_size=80)
ports = st.sampled_from(["gi", "seq", "query", "db"])
inline_bindings = st.builds(
    StoredBinding, port=ports, inline=st.text(max_size=40)
)
file_bindings = st.builds(
    lambda port, digest, size: StoredBinding(
        port, file=StoredFile(f"{port}.dat", digest, size)
    ),
    ports,
    st.text(alphabet="0123456789abcdef", min_size=64, max_size=64),
    st.integers(min_value=0, max_value=2**40),
)


@settings(max_examples=60)
@given(
    note=notes,
    bindings=st.lists(st.one_of(inline_bindings, file_bindings), max_size=4),
    state=st.sampled_from([RunState.CREATED, RunState.RUNNING, RunState.FINISHED]),
)
def test_record_roundtrip_property(tmp_path_factory, note, bindings, state):
    unique = {b.port: b for b in bindings}
    record = make_record(
        note=note, bindings=tuple(unique.values()), manifest=None, output_paths={}
    )
    record = record.with_descriptor(make_descriptor(state=state))
    root = tmp_path_factory.mktemp("store")
    save_record(root, record)
    loaded = load_record(root, "run-1")
    assert loaded == record
    save_record(root, loaded)
    assert load_record(root, "run-1") == record

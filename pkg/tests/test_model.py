"""Lifecycle table, timestamps, descriptors, and binding validation."""

from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pocketflow.errors import BindingValidationError, DecodeError, IllegalTransition
from pocketflow.model import (
    MONITOR_TERMINAL_STATES,
    SEMI_TERMINAL_STATES,
    TERMINAL_STATES,
    InputBinding,
    OutputArtifact,
    OutputManifest,
    PortSpec,
    RunDescriptor,
    RunEvent,
    RunState,
    WorkflowRef,
    format_rfc3339,
    legal_events,
    parse_rfc3339,
    reachable_states,
    transition,
    validate_bindings,
)

# Independent restatement of the lifecycle table. The test sweeps the full
# state x event product, so any drift in either direction fails loudly.
LEGAL = {
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


def test_transition_table_is_exactly_the_legal_set():
    checked = 0
    for state in RunState:
        for event in RunEvent:
            checked += 1
            if (state, event) in LEGAL:
                assert transition(state, event) is LEGAL[(state, event)]
            else:
                with pytest.raises(IllegalTransition) as err:
                    transition(state, event)
                assert err.value.state is state
                assert err.value.event is event
    assert checked == 42
    assert len(LEGAL) == 10


def test_semi_terminal_states_only_expire():
    for state in SEMI_TERMINAL_STATES:
        assert legal_events(state) == {RunEvent.EXPIRE}


def test_terminal_state_accepts_nothing():
    assert TERMINAL_STATES == {RunState.EXPIRED}
    assert legal_events(RunState.EXPIRED) == frozenset()
    assert MONITOR_TERMINAL_STATES == SEMI_TERMINAL_STATES | TERMINAL_STATES


def test_reachability():
    assert reachable_states(RunState.CREATED) == frozenset(RunState) - {RunState.CREATED}
    assert reachable_states(RunState.FINISHED) == {RunState.EXPIRED}
    assert reachable_states(RunState.EXPIRED) == frozenset()


@given(st.sampled_from(list(RunState)), st.sampled_from(list(RunEvent)))
def test_transition_total_and_pure(state, event):
    try:
        first = transition(state, event)
    except IllegalTransition:
        with pytest.raises(IllegalTransition):
            transition(state, event)
        return
    assert isinstance(first, RunState)
    assert transition(state, event) is first


@given(st.sampled_from(sorted(SEMI_TERMINAL_STATES, key=str)))
def test_no_path_back_from_semi_terminal(state):
    assert reachable_states(state) == {RunState.EXPIRED}


# -- timestamps --------------------------------------------------------------


def test_rfc3339_z_suffix_parses():
    dt = parse_rfc3339("2026-03-01T12:30:00Z")
    assert dt == datetime(2026, 3, 1, 12, 30, tzinfo=timezone.utc)


def test_rfc3339_numeric_offset_normalizes_to_utc():
    dt = parse_rfc3339("2026-03-01T14:30:00+02:00")
    assert dt == datetime(2026, 3, 1, 12, 30, tzinfo=timezone.utc)


@pytest.mark.parametrize("bad", ["", "yesterday", "2026-03-01T12:30:00", "2026-13-40T99:00:00Z"])
def test_rfc3339_rejects(bad):
    with pytest.raises(DecodeError):
        parse_rfc3339(bad)


def test_format_rfc3339_requires_aware():
    with pytest.raises(ValueError):
        format_rfc3339(datetime(2026, 1, 1))


@given(
    st.datetimes(
        min_value=datetime(1990, 1, 1),
        max_value=datetime(2100, 1, 1),
        timezones=st.just(timezone.utc),
    )
)
def test_rfc3339_roundtrip(dt):
    assert parse_rfc3339(format_rfc3339(dt)) == dt
    assert format_rfc3339(dt).endswith("Z")


# -- workflow identity -------------------------------------------------------


def test_workflow_ref_string_form():
    ref = WorkflowRef("2659", 5, "http://repo.example")
    assert str(ref) == "2659@5"


def test_workflow_ref_rejects_bad_version():
    with pytest.raises(ValueError):
        WorkflowRef("2659", 0, "")
    with pytest.raises(ValueError):
        WorkflowRef("", 1, "")


def test_workflow_ref_json_roundtrip():
    ref = WorkflowRef("74", 4, "http://repo.example")
    assert WorkflowRef.from_json_obj(ref.to_json_obj()) == ref
    with pytest.raises(DecodeError):
        WorkflowRef.from_json_obj({"version": 4})


def test_port_spec_validation():
    with pytest.raises(ValueError):
        PortSpec(name="not a name", depth=0)
    with pytest.raises(ValueError):
        PortSpec(name="ok", depth=2)
    assert PortSpec(name="gi", depth=1).required


def test_input_binding_exactly_one_variant():
    assert InputBinding(port="gi", inline="x").variant == "inline"
    assert InputBinding(port="gi", file=Path("f.txt")).variant == "file"
    assert InputBinding(port="gi", remote_file="f.txt").variant == "remote_file"
    with pytest.raises(ValueError):
        InputBinding(port="gi")
    with pytest.raises(ValueError):
        InputBinding(port="gi", inline="x", remote_file="y")


# -- run descriptors ---------------------------------------------------------

T0 = datetime(2026, 3, 1, 12, 0, tzinfo=timezone.utc)


def _descriptor(state, **stamps):
    return RunDescriptor(
        run_id="r1",
        server_base="http://exec.example",
        state=state,
        expiry_at=T0 + timedelta(hours=24),
        workflow=WorkflowRef("2659", 5, "http://repo.example"),
        created_at=T0,
        **stamps,
    )


def test_descriptor_invariants_accept_consistent_histories():
    _descriptor(RunState.CREATED).check_invariants()
    _descriptor(RunState.READY).check_invariants()
    _descriptor(RunState.RUNNING, started_at=T0).check_invariants()
    _descriptor(
        RunState.FINISHED, started_at=T0, finished_at=T0 + timedelta(seconds=5)
    ).check_invariants()
    _descriptor(
        RunState.FAILED, started_at=T0, finished_at=T0 + timedelta(seconds=5)
    ).check_invariants()
    # cancel can land before the run ever started
    _descriptor(RunState.CANCELLED, finished_at=T0).check_invariants()
    _descriptor(RunState.CANCELLED, started_at=T0, finished_at=T0).check_invariants()


@pytest.mark.parametrize(
    "state,stamps",
    [
        (RunState.CREATED, {"started_at": T0}),
        (RunState.READY, {"finished_at": T0}),
        (RunState.RUNNING, {}),
        (RunState.RUNNING, {"started_at": T0, "finished_at": T0}),
        (RunState.FINISHED, {"started_at": T0}),
        (RunState.FAILED, {"finished_at": T0}),
        (RunState.CANCELLED, {}),
    ],
)
def test_descriptor_invariants_reject_inconsistent_histories(state, stamps):
    with pytest.raises(ValueError):
        _descriptor(state, **stamps).check_invariants()


def test_descriptor_rejects_decreasing_timestamps():
    with pytest.raises(ValueError):
        _descriptor(
            RunState.FINISHED, started_at=T0 - timedelta(seconds=1), finished_at=T0
        ).check_invariants()


def test_descriptor_json_roundtrip():
    desc = _descriptor(RunState.FINISHED, started_at=T0, finished_at=T0 + timedelta(seconds=9))
    back = RunDescriptor.from_json_obj(desc.to_json_obj(), server_base=desc.server_base)
    assert back == desc


def test_descriptor_json_handles_absent_workflow_and_stamps():
    desc = RunDescriptor(
        run_id="r2", server_base="b", state=RunState.CREATED, expiry_at=T0, created_at=T0
    )
    obj = desc.to_json_obj()
    assert obj["workflow"] is None
    assert obj["started_at"] is None
    assert RunDescriptor.from_json_obj(obj, server_base="b") == desc


def test_descriptor_json_rejects_unknown_state():
    with pytest.raises(DecodeError):
        RunDescriptor.from_json_obj(
            {"run_id": "r", "state": "Paused", "expiry_at": format_rfc3339(T0)}
        )


# -- output manifests --------------------------------------------------------


def _artifact(port="pathways", **over):
    base = dict(
        port=port,
        depth=1,
        media_type="text/plain; charset=utf-8",
        byte_size=42,
        sha256="0" * 64,
        remote_path=f"/runs/r1/outputs/{port}",
    )
    base.update(over)
    return OutputArtifact(**base)


def test_manifest_lookup_and_roundtrip():
    manifest = OutputManifest(run_id="r1", entries=(_artifact(), _artifact(port="log", depth=0)))
    assert manifest.entry("log").depth == 0
    assert manifest.entry("absent") is None
    assert OutputManifest.from_json_obj(manifest.to_json_obj()) == manifest


def test_manifest_rejects_duplicate_ports():
    with pytest.raises(ValueError):
        OutputManifest(run_id="r1", entries=(_artifact(), _artifact()))


# -- binding validation ------------------------------------------------------

PORTS = [
    PortSpec(name="gi", depth=0),
    PortSpec(name="query", depth=0),
    PortSpec(name="notes", depth=0, required=False),
]


def test_validate_bindings_success_keyed_by_port():
    bound = validate_bindings(
        PORTS, [InputBinding(port="query", inline="b"), InputBinding(port="gi", inline="a")]
    )
    assert set(bound) == {"gi", "query"}
    assert bound["gi"].inline == "a"


def test_validate_bindings_reports_all_violations_at_once():
    with pytest.raises(BindingValidationError) as err:
        validate_bindings(
            PORTS,
            [
                InputBinding(port="gi", inline="a"),
                InputBinding(port="gi", inline="b"),
                InputBinding(port="bogus", inline="c"),
            ],
        )
    assert err.value.missing == ["query"]
    assert err.value.unknown == ["bogus"]
    assert err.value.duplicate == ["gi"]


def test_validate_bindings_optional_port_may_stay_unbound():
    bound = validate_bindings(
        PORTS, [InputBinding(port="gi", inline="a"), InputBinding(port="query", inline="b")]
    )
    assert "notes" not in bound


def test_validate_bindings_rejects_duplicate_port_declarations():
    with pytest.raises(ValueError):
        validate_bindings([PortSpec(name="x", depth=0)] * 2, [])


_port_names = st.sampled_from(["gi", "query", "notes", "bogus", "extra"])
_bindings = st.lists(
    _port_names.map(lambda name: InputBinding(port=name, inline="v")), max_size=8
)


@given(_bindings, st.randoms(use_true_random=False))
def test_validate_bindings_order_insensitive(bindings, rng):
    def outcome(items):
        try:
            return sorted(validate_bindings(PORTS, items))
        except BindingValidationError as err:
            return (err.missing, err.unknown, err.duplicate)

    shuffled = list(bindings)
    rng.shuffle(shuffled)
    assert outcome(bindings) == outcome(shuffled)


@given(_bindings)
def test_validate_bindings_error_lists_are_disjoint_and_sorted(bindings):
    try:
        bound = validate_bindings(PORTS, bindings)
    except BindingValidationError as err:
        groups = [err.missing, err.unknown, err.duplicate]
        for group in groups:
            assert group == sorted(set(group))
        assert not (set(err.missing) & set(err.unknown))
        assert not (set(err.missing) & set(err.duplicate))
        # anything reported missing truly has no binding
        bound_names = {b.port for b in bindings}
        assert not (set(err.missing) & bound_names)
    else:
        declared = {p.name for p in PORTS}
        assert {b.port for b in bindings} <= declared
        assert bound.keys() <= declared

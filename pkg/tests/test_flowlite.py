"""Parsing, validation, depth inference, and execution of flowlite documents."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pocketflow import flowlite
from pocketflow.errors import (
    BadSignature,
    CycleError,
    DepthOverflow,
    FlowFormatError,
    FlowSyntaxError,
    UnknownSource,
)
from pocketflow.flowlite import WireRef, depth_of, value_from_bytes, value_to_bytes

from flowgen import random_bindings, random_document
from oracle import evaluate_document


def doc_bytes(**over):
    """A small valid document: split a phrase, uppercase every piece."""
    doc = {
        "flowlite": 1,
        "name": "tokenize",
        "inputs": [{"name": "query", "depth": 0, "description": "free text"}],
        "outputs": [{"name": "tokens", "from": "shout.out"}],
        "processors": [
            {"name": "pieces", "op": "split", "params": {"sep": " "}, "inputs": {"x": "inputs.query"}},
            {"name": "shout", "op": "uppercase", "params": {}, "inputs": {"x": "pieces.out"}},
        ],
    }
    doc.update(over)
    return json.dumps(doc).encode()


def parse_doc(**over):
    return flowlite.parse(doc_bytes(**over))


# -- wire references ----------------------------------------------------------


def test_wireref_forms():
    assert WireRef.parse("inputs.query") == WireRef("input", "query")
    assert WireRef.parse("shout.out") == WireRef("processor", "shout")
    assert str(WireRef.parse("inputs.query")) == "inputs.query"
    # a port can legitimately be called "out"
    assert WireRef.parse("inputs.out") == WireRef("input", "out")


@pytest.mark.parametrize("bad", ["", "query", "inputs.", ".out", "inputs.a.out", "a b.out", "inputs.1x"])
def test_wireref_rejects(bad):
    with pytest.raises(ValueError):
        WireRef.parse(bad)


# -- parsing ------------------------------------------------------------------


def test_parse_happy_path():
    graph = parse_doc()
    assert graph.name == "tokenize"
    assert [p.name for p in graph.inputs] == ["query"]
    assert graph.inputs[0].description == "free text"
    assert [p.name for p in graph.processors] == ["pieces", "shout"]
    assert graph.outputs[0].source == WireRef("processor", "shout")


@pytest.mark.parametrize("raw", [b"{nope", b"[1, 2]", b'"text"', b"\xff\xfe"])
def test_parse_syntax_errors(raw):
    with pytest.raises(FlowSyntaxError):
        flowlite.parse(raw)


def format_error(**over):
    with pytest.raises(FlowFormatError) as err:
        parse_doc(**over)
    return err.value


def test_parse_rejects_unsupported_version():
    assert format_error(flowlite=2).path == "/flowlite"
    assert format_error(flowlite=2).reason == "unsupported version"
    assert format_error(flowlite=True).path == "/flowlite"
    assert format_error(flowlite="1").path == "/flowlite"


def test_parse_reports_missing_keys():
    raw = json.loads(doc_bytes())
    del raw["flowlite"]
    with pytest.raises(FlowFormatError) as err:
        flowlite.parse(json.dumps(raw))
    assert err.value.path == "/flowlite"
    assert err.value.reason == "missing"


def test_parse_rejects_unknown_top_level_key():
    err = format_error(comment="hi")
    assert (err.path, err.reason) == ("/comment", "unknown key")


@pytest.mark.parametrize(
    "over,path",
    [
        (dict(name=""), "/name"),
        (dict(name=17), "/name"),
        (dict(inputs={"query": 0}), "/inputs"),
        (dict(inputs=[{"name": "1bad", "depth": 0}]), "/inputs/0/name"),
        (dict(inputs=[{"name": "q", "depth": 3}]), "/inputs/0/depth"),
        (dict(inputs=[{"name": "q", "depth": True}]), "/inputs/0/depth"),
        (dict(inputs=[{"name": "q", "depth": 0, "extra": 1}]), "/inputs/0/extra"),
        (dict(outputs=[{"name": "r"}]), "/outputs/0/from"),
        (dict(outputs=[{"name": "r", "from": "no-dots"}]), "/outputs/0/from"),
    ],
)
def test_parse_pinpoints_schema_violations(over, path):
    assert format_error(**over).path == path


def test_parse_rejects_duplicate_input_names():
    err = format_error(
        inputs=[{"name": "q", "depth": 0}, {"name": "q", "depth": 1}],
        processors=[],
        outputs=[],
    )
    assert (err.path, err.reason) == ("/inputs/1/name", "duplicate")


def test_parse_rejects_duplicate_processor_names():
    err = format_error(
        processors=[
            {"name": "a", "op": "const", "params": {"value": "x"}, "inputs": {}},
            {"name": "a", "op": "const", "params": {"value": "y"}, "inputs": {}},
        ],
        outputs=[{"name": "r", "from": "a.out"}],
    )
    assert (err.path, err.reason) == ("/processors/1/name", "duplicate")


def test_parse_rejects_duplicate_output_names():
    err = format_error(
        outputs=[{"name": "tokens", "from": "shout.out"}, {"name": "tokens", "from": "pieces.out"}]
    )
    assert (err.path, err.reason) == ("/outputs/1/name", "duplicate")


def test_parse_reserves_the_input_namespace():
    err = format_error(
        processors=[{"name": "inputs", "op": "const", "params": {"value": "x"}, "inputs": {}}],
        outputs=[],
    )
    assert (err.path, err.reason) == ("/processors/0/name", "reserved name")


def proc_error(processor, path, reason=None):
    err = format_error(processors=[processor], outputs=[])
    assert err.path == path
    if reason is not None:
        assert err.reason == reason


def test_parse_checks_params_per_op():
    proc_error({"name": "p", "op": "frobnicate", "inputs": {}}, "/processors/0/op", "unknown op")
    proc_error({"name": "p", "op": "const", "params": {}, "inputs": {}}, "/processors/0/params/value", "missing")
    proc_error({"name": "p", "op": "const", "params": {"value": 7}, "inputs": {}}, "/processors/0/params/value")
    proc_error({"name": "p", "op": "const", "params": {"value": ["a", 7]}, "inputs": {}}, "/processors/0/params/value")
    proc_error(
        {"name": "p", "op": "split", "params": {"sep": ""}, "inputs": {"x": "inputs.query"}},
        "/processors/0/params/sep",
    )
    proc_error(
        {"name": "p", "op": "split", "params": {}, "inputs": {"x": "inputs.query"}},
        "/processors/0/params/sep",
        "missing",
    )
    proc_error(
        {"name": "p", "op": "concat", "params": {"sep": 3}, "inputs": {"a": "inputs.query", "b": "inputs.query"}},
        "/processors/0/params/sep",
    )
    proc_error(
        {"name": "p", "op": "uppercase", "params": {"sep": " "}, "inputs": {"x": "inputs.query"}},
        "/processors/0/params/sep",
        "unknown key",
    )


def test_parse_checks_lookup_tables():
    def lookup(params):
        return {"name": "p", "op": "lookup", "params": params, "inputs": {"key": "inputs.query"}}

    proc_error(lookup({"table": {}}), "/processors/0/params/default", "missing")
    proc_error(lookup({"table": [], "default": "d"}), "/processors/0/params/table")
    proc_error(lookup({"table": {"k": 1}, "default": "d"}), "/processors/0/params/table")
    proc_error(
        lookup({"table": {"a": "x", "b": ["y"]}, "default": "d"}),
        "/processors/0/params/table",
        "mixed value depths",
    )
    proc_error(
        lookup({"table": {"a": ["x"]}, "default": "d"}),
        "/processors/0/params/default",
        "depth differs from table values",
    )
    # empty table: any default depth goes
    flowlite.parse(json.dumps({
        "flowlite": 1, "name": "n",
        "inputs": [{"name": "query", "depth": 0}],
        "outputs": [{"name": "r", "from": "p.out"}],
        "processors": [lookup({"table": {}, "default": ["d"]})],
    }))


def test_parse_rejects_bad_wireref_in_processor_inputs():
    proc_error(
        {"name": "p", "op": "uppercase", "params": {}, "inputs": {"x": "query"}},
        "/processors/0/inputs/x",
        "bad wire reference",
    )


# -- validation ---------------------------------------------------------------


def graph_with_processors(processors, outputs=None, inputs=None):
    return flowlite.parse(json.dumps({
        "flowlite": 1,
        "name": "n",
        "inputs": [{"name": "query", "depth": 0}, {"name": "items", "depth": 1}]
        if inputs is None else inputs,
        "outputs": outputs or [],
        "processors": processors,
    }))


def test_validate_unknown_sources():
    graph = graph_with_processors(
        [{"name": "p", "op": "uppercase", "params": {}, "inputs": {"x": "inputs.absent"}}]
    )
    with pytest.raises(UnknownSource) as err:
        flowlite.validate(graph)
    assert err.value.ref == "inputs.absent"

    graph = graph_with_processors([], outputs=[{"name": "r", "from": "ghost.out"}])
    with pytest.raises(UnknownSource) as err:
        flowlite.validate(graph)
    assert err.value.ref == "ghost.out"


def test_validate_reports_cycle_in_document_order():
    graph = graph_with_processors([
        {"name": "p1", "op": "uppercase", "params": {}, "inputs": {"x": "p2.out"}},
        {"name": "p2", "op": "uppercase", "params": {}, "inputs": {"x": "p1.out"}},
    ])
    with pytest.raises(CycleError) as err:
        flowlite.validate(graph)
    assert err.value.nodes == ["p1", "p2"]


def test_validate_self_loop():
    graph = graph_with_processors(
        [{"name": "p1", "op": "uppercase", "params": {}, "inputs": {"x": "p1.out"}}]
    )
    with pytest.raises(CycleError) as err:
        flowlite.validate(graph)
    assert err.value.nodes == ["p1"]


def test_validate_cycle_skips_acyclic_prefix():
    graph = graph_with_processors([
        {"name": "p0", "op": "const", "params": {"value": "x"}, "inputs": {}},
        {"name": "p1", "op": "concat", "params": {}, "inputs": {"a": "p0.out", "b": "p2.out"}},
        {"name": "p2", "op": "uppercase", "params": {}, "inputs": {"x": "p1.out"}},
    ])
    with pytest.raises(CycleError) as err:
        flowlite.validate(graph)
    assert err.value.nodes == ["p1", "p2"]


def test_validate_signature_mismatches():
    for inputs in ({}, {"a": "inputs.query"}, {"x": "inputs.query", "y": "inputs.query"}):
        graph = graph_with_processors(
            [{"name": "p", "op": "uppercase", "params": {}, "inputs": inputs}]
        )
        with pytest.raises(BadSignature) as err:
            flowlite.validate(graph)
        assert err.value.processor == "p"


def test_validate_rejects_two_iterating_arguments():
    graph = graph_with_processors([
        {"name": "p", "op": "concat", "params": {}, "inputs": {"a": "inputs.items", "b": "inputs.items"}},
    ])
    with pytest.raises(BadSignature) as err:
        flowlite.validate(graph)
    assert "depth-1" in err.value.detail


def test_validate_depth_overflow():
    # split already yields a list; iterating it would nest two deep
    graph = graph_with_processors([
        {"name": "p", "op": "split", "params": {"sep": " "}, "inputs": {"x": "inputs.items"}},
    ])
    with pytest.raises(DepthOverflow):
        flowlite.validate(graph)

    graph = graph_with_processors([
        {"name": "p", "op": "lookup",
         "params": {"table": {"k": ["v"]}, "default": ["d"]},
         "inputs": {"key": "inputs.items"}},
    ])
    with pytest.raises(DepthOverflow):
        flowlite.validate(graph)


# -- interface ----------------------------------------------------------------


def test_interface_reports_ports_and_inferred_depths():
    inputs, outputs = flowlite.interface(parse_doc())
    assert [(p.name, p.depth, p.description) for p in inputs] == [("query", 0, "free text")]
    assert [(p.name, p.depth) for p in outputs] == [("tokens", 1)]


def test_interface_depth_cases():
    graph = graph_with_processors(
        [
            {"name": "c", "op": "const", "params": {"value": ["a", "b"]}, "inputs": {}},
            {"name": "u", "op": "uppercase", "params": {}, "inputs": {"x": "inputs.items"}},
            {"name": "j", "op": "concat", "params": {"sep": "-"},
             "inputs": {"a": "inputs.query", "b": "inputs.query"}},
            {"name": "l", "op": "lookup",
             "params": {"table": {"k": ["x", "y"]}, "default": []},
             "inputs": {"key": "inputs.query"}},
        ],
        outputs=[
            {"name": "r0", "from": "c.out"},
            {"name": "r1", "from": "u.out"},
            {"name": "r2", "from": "j.out"},
            {"name": "r3", "from": "l.out"},
            {"name": "r4", "from": "inputs.items"},
        ],
    )
    _, outputs = flowlite.interface(graph)
    assert [(p.name, p.depth) for p in outputs] == [
        ("r0", 1), ("r1", 1), ("r2", 0), ("r3", 1), ("r4", 1),
    ]


# -- execution ----------------------------------------------------------------


def test_execute_split_then_uppercase():
    result = flowlite.execute(parse_doc(), {"query": "heat shock protein"})
    assert result == {"tokens": ["HEAT", "SHOCK", "PROTEIN"]}


def test_execute_lookup_hit_and_default():
    graph = graph_with_processors(
        [
            {"name": "l", "op": "lookup",
             "params": {"table": {"84579909": ["path:a", "path:b"]}, "default": ["none found"]},
             "inputs": {"key": "inputs.query"}},
        ],
        outputs=[{"name": "r", "from": "l.out"}],
    )
    assert flowlite.execute(graph, {"query": "84579909", "items": []}) == {
        "r": ["path:a", "path:b"]
    }
    assert flowlite.execute(graph, {"query": "zzz", "items": []}) == {"r": ["none found"]}


def test_execute_iterates_over_single_list_argument():
    graph = graph_with_processors(
        [
            {"name": "tag", "op": "concat", "params": {"sep": ":"},
             "inputs": {"a": "inputs.query", "b": "inputs.items"}},
        ],
        outputs=[{"name": "r", "from": "tag.out"}],
    )
    result = flowlite.execute(graph, {"query": "id", "items": ["x", "y"]})
    assert result == {"r": ["id:x", "id:y"]}


def test_execute_empty_list_propagates():
    result = flowlite.execute(parse_doc(), {"query": ""})
    assert result == {"tokens": [""]}  # str.split(" ") of "" is [""]
    graph = graph_with_processors(
        [{"name": "u", "op": "uppercase", "params": {}, "inputs": {"x": "inputs.items"}}],
        outputs=[{"name": "r", "from": "u.out"}],
    )
    assert flowlite.execute(graph, {"query": "", "items": []}) == {"r": []}


def test_execute_output_straight_from_input():
    graph = graph_with_processors([], outputs=[{"name": "echo", "from": "inputs.query"}])
    assert flowlite.execute(graph, {"query": "hi", "items": []}) == {"echo": "hi"}


def test_execute_rejects_missing_or_misshapen_bindings():
    graph = parse_doc()
    with pytest.raises(ValueError):
        flowlite.execute(graph, {})
    with pytest.raises(ValueError):
        flowlite.execute(graph, {"query": ["not", "text"]})


def test_execute_is_deterministic():
    graph = parse_doc()
    bindings = {"query": "a b c"}
    assert flowlite.execute(graph, bindings) == flowlite.execute(graph, bindings)


def shuffled_copy(doc, rng):
    clone = json.loads(json.dumps(doc))
    rng.shuffle(clone["processors"])
    return clone


def test_execute_ignores_processor_document_order():
    rng = random.Random(7)
    for seed in range(40):
        doc = random_document(random.Random(seed))
        bindings = random_bindings(random.Random(seed + 1), doc)
        expected = flowlite.execute(flowlite.parse(json.dumps(doc)), bindings)
        for _ in range(3):
            permuted = shuffled_copy(doc, rng)
            assert flowlite.execute(flowlite.parse(json.dumps(permuted)), bindings) == expected


@pytest.mark.parametrize("seed", range(300))
def test_execute_agrees_with_reference_evaluator(seed):
    doc = random_document(random.Random(seed))
    bindings = random_bindings(random.Random(seed * 31 + 1), doc)
    graph = flowlite.parse(json.dumps(doc))
    expected = evaluate_document(doc, bindings)
    assert flowlite.execute(graph, bindings) == expected


@pytest.mark.parametrize("seed", range(0, 300, 7))
def test_inferred_depths_match_produced_values(seed):
    doc = random_document(random.Random(seed))
    bindings = random_bindings(random.Random(seed * 13 + 5), doc)
    graph = flowlite.parse(json.dumps(doc))
    _, out_specs = flowlite.interface(graph)
    values = flowlite.execute(graph, bindings)
    for spec in out_specs:
        assert depth_of(values[spec.name]) == spec.depth


# -- canonical value bytes ----------------------------------------------------


def test_value_bytes_forms():
    assert value_to_bytes("plain text") == b"plain text"
    assert value_to_bytes(["a", "b"]) == b"a\nb\n"
    assert value_to_bytes([]) == b""
    assert value_to_bytes(["", ""]) == b"\n\n"
    assert value_from_bytes(b"a\nb\n", 1) == ["a", "b"]
    assert value_from_bytes(b"", 1) == []
    assert value_from_bytes(b"text", 0) == "text"


@given(st.text())
def test_value_bytes_roundtrip_depth0(text):
    assert value_from_bytes(value_to_bytes(text), 0) == text


@settings(max_examples=200)
@given(st.lists(st.text(alphabet=st.characters(blacklist_characters="\n", blacklist_categories=("Cs",)))))
def test_value_bytes_roundtrip_depth1(items):
    # newline-free elements roundtrip exactly; newlines are the separator
    assert value_from_bytes(value_to_bytes(items), 1) == items

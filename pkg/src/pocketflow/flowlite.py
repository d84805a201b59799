"""flowlite: a minimal dataflow definition format and its interpreter.

A document wires named processors into an acyclic graph between declared
input and output ports:

    {"flowlite": 1, "name": str,
     "inputs":  [{"name": str, "depth": 0|1, "description": str}],
     "outputs": [{"name": str, "from": wireref}],
     "processors": [{"name": str, "op": str, "params": {...},
                     "inputs": {arg: wireref}}]}

A wireref is either ``inputs.<port>`` or ``<processor>.out``. Values are
UTF-8 text (depth 0) or lists of text (depth 1); there is no deeper nesting.

Five builtin operations work on text values:

    const()      -> params.value
    concat(a,b)  -> a + params.sep + b          (sep defaults to "")
    uppercase(x) -> Unicode-simple uppercase of x
    split(x)     -> segments of x by params.sep (sep required, non-empty)
    lookup(key)  -> params.table[key] if present else params.default

Every argument expects depth 0. Handing a depth-1 value to exactly one
argument maps the processor element-wise over it and raises the output depth
by one (at most one such argument per processor; produced depth may never
exceed 1 — both are validation-time errors).

All operations here are pure functions over immutable values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from graphlib import CycleError as _GraphCycleError
from graphlib import TopologicalSorter
from typing import Any, Mapping, Union

from pocketflow.errors import (
    BadSignature,
    CycleError,
    DepthOverflow,
    FlowFormatError,
    FlowSyntaxError,
    UnknownSource,
)
from pocketflow.model import PortSpec, is_identifier

Value = Union[str, list]

RESERVED_SOURCE_NAMESPACE = "inputs"

_OP_ARGS: dict[str, frozenset[str]] = {
    "const": frozenset(),
    "concat": frozenset({"a", "b"}),
    "uppercase": frozenset({"x"}),
    "split": frozenset({"x"}),
    "lookup": frozenset({"key"}),
}


def depth_of(value: Value) -> int:
    return 1 if isinstance(value, list) else 0


def value_to_bytes(value: Value) -> bytes:
    """Canonical serialization: depth 0 is the raw UTF-8 text, depth 1 is
    one element per line, each line LF-terminated."""
    if isinstance(value, str):
        return value.encode("utf-8")
    return "".join(item + "\n" for item in value).encode("utf-8")


def value_from_bytes(data: bytes, depth: int) -> Value:
    """Inverse of value_to_bytes for the given depth."""
    text = data.decode("utf-8")
    if depth == 0:
        return text
    if not text:
        return []
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


# ---------------------------------------------------------------------------
# graph types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WireRef:
    """Reference to a value source: an input port or a processor output."""

    kind: str  # "input" | "processor"
    name: str

    def __str__(self) -> str:
        return f"inputs.{self.name}" if self.kind == "input" else f"{self.name}.out"

    @classmethod
    def parse(cls, text: str) -> "WireRef":
        if text.startswith("inputs."):
            port = text[len("inputs."):]
            if is_identifier(port):
                return cls("input", port)
        elif text.endswith(".out"):
            proc = text[: -len(".out")]
            if is_identifier(proc):
                return cls("processor", proc)
        raise ValueError(f"bad wire reference {text!r}")


@dataclass(frozen=True)
class Processor:
    name: str
    op: str
    params: Mapping[str, Any]
    inputs: Mapping[str, WireRef]


@dataclass(frozen=True)
class OutputWire:
    name: str
    source: WireRef


@dataclass(frozen=True)
class FlowGraph:
    name: str
    inputs: tuple[PortSpec, ...]
    outputs: tuple[OutputWire, ...]
    processors: tuple[Processor, ...]

    def processor(self, name: str) -> Processor | None:
        for proc in self.processors:
            if proc.name == name:
                return proc
        return None

    def input_port(self, name: str) -> PortSpec | None:
        for port in self.inputs:
            if port.name == name:
                return port
        return None


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _fail(path: str, reason: str) -> FlowFormatError:
    return FlowFormatError(path, reason)


def _require_keys(obj: Mapping[str, Any], path: str, required: set[str], optional: set[str]) -> None:
    for key in obj:
        if key not in required and key not in optional:
            raise _fail(f"{path}/{key}", "unknown key")
    for key in sorted(required):
        if key not in obj:
            raise _fail(f"{path}/{key}", "missing")


def _text_or_list(value: Any) -> int | None:
    """Depth of a literal value, or None if it is neither text nor list of text."""
    if isinstance(value, str):
        return 0
    if isinstance(value, list) and all(isinstance(item, str) for item in value):
        return 1
    return None


def parse(data: bytes | str) -> FlowGraph:
    """Parse flowlite document bytes into a FlowGraph.

    Raises FlowSyntaxError for non-well-formed input and FlowFormatError
    (with a slash-separated path into the document) for the first schema
    violation found.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FlowSyntaxError(f"not UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FlowSyntaxError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FlowSyntaxError("document must be a JSON object")

    _require_keys(doc, "", {"flowlite", "name", "inputs", "outputs", "processors"}, set())
    # bool is an int subtype, so `true != 1` would not catch it
    if isinstance(doc["flowlite"], bool) or doc["flowlite"] != 1:
        raise _fail("/flowlite", "unsupported version")
    if not isinstance(doc["name"], str) or not doc["name"]:
        raise _fail("/name", "must be non-empty text")

    inputs = _parse_inputs(doc["inputs"])
    processors = _parse_processors(doc["processors"])
    outputs = _parse_outputs(doc["outputs"])
    return FlowGraph(
        name=doc["name"], inputs=inputs, outputs=outputs, processors=processors
    )


def _parse_inputs(items: Any) -> tuple[PortSpec, ...]:
    if not isinstance(items, list):
        raise _fail("/inputs", "must be a list")
    ports: list[PortSpec] = []
    seen: set[str] = set()
    for i, entry in enumerate(items):
        path = f"/inputs/{i}"
        if not isinstance(entry, dict):
            raise _fail(path, "must be an object")
        _require_keys(entry, path, {"name", "depth"}, {"description"})
        name = entry["name"]
        if not isinstance(name, str) or not is_identifier(name):
            raise _fail(f"{path}/name", "not an identifier")
        if name in seen:
            raise _fail(f"{path}/name", "duplicate")
        seen.add(name)
        if isinstance(entry["depth"], bool) or entry["depth"] not in (0, 1):
            raise _fail(f"{path}/depth", "must be 0 or 1")
        description = entry.get("description", "")
        if not isinstance(description, str):
            raise _fail(f"{path}/description", "must be text")
        ports.append(PortSpec(name=name, depth=entry["depth"], description=description))
    return tuple(ports)


def _parse_wireref(value: Any, path: str) -> WireRef:
    if not isinstance(value, str):
        raise _fail(path, "must be text")
    try:
        return WireRef.parse(value)
    except ValueError:
        raise _fail(path, "bad wire reference") from None


def _parse_outputs(items: Any) -> tuple[OutputWire, ...]:
    if not isinstance(items, list):
        raise _fail("/outputs", "must be a list")
    outputs: list[OutputWire] = []
    seen: set[str] = set()
    for i, entry in enumerate(items):
        path = f"/outputs/{i}"
        if not isinstance(entry, dict):
            raise _fail(path, "must be an object")
        _require_keys(entry, path, {"name", "from"}, set())
        name = entry["name"]
        if not isinstance(name, str) or not is_identifier(name):
            raise _fail(f"{path}/name", "not an identifier")
        if name in seen:
            raise _fail(f"{path}/name", "duplicate")
        seen.add(name)
        outputs.append(OutputWire(name=name, source=_parse_wireref(entry["from"], f"{path}/from")))
    return tuple(outputs)


def _parse_processors(items: Any) -> tuple[Processor, ...]:
    if not isinstance(items, list):
        raise _fail("/processors", "must be a list")
    processors: list[Processor] = []
    seen: set[str] = set()
    for i, entry in enumerate(items):
        path = f"/processors/{i}"
        if not isinstance(entry, dict):
            raise _fail(path, "must be an object")
        _require_keys(entry, path, {"name", "op"}, {"params", "inputs"})
        name = entry["name"]
        if not isinstance(name, str) or not is_identifier(name):
            raise _fail(f"{path}/name", "not an identifier")
        if name == RESERVED_SOURCE_NAMESPACE:
            raise _fail(f"{path}/name", "reserved name")
        if name in seen:
            raise _fail(f"{path}/name", "duplicate")
        seen.add(name)
        op = entry["op"]
        if op not in _OP_ARGS:
            raise _fail(f"{path}/op", "unknown op")
        params = _parse_params(op, entry.get("params", {}), f"{path}/params")
        raw_inputs = entry.get("inputs", {})
        if not isinstance(raw_inputs, dict):
            raise _fail(f"{path}/inputs", "must be an object")
        wires = {
            arg: _parse_wireref(ref, f"{path}/inputs/{arg}") for arg, ref in raw_inputs.items()
        }
        processors.append(Processor(name=name, op=op, params=params, inputs=wires))
    return tuple(processors)


def _parse_params(op: str, params: Any, path: str) -> dict[str, Any]:
    if not isinstance(params, dict):
        raise _fail(path, "must be an object")
    if op == "const":
        _require_keys(params, path, {"value"}, set())
        if _text_or_list(params["value"]) is None:
            raise _fail(f"{path}/value", "must be text or a list of text")
    elif op == "concat":
        _require_keys(params, path, set(), {"sep"})
        if "sep" in params and not isinstance(params["sep"], str):
            raise _fail(f"{path}/sep", "must be text")
    elif op == "uppercase":
        _require_keys(params, path, set(), set())
    elif op == "split":
        _require_keys(params, path, {"sep"}, set())
        if not isinstance(params["sep"], str) or not params["sep"]:
            raise _fail(f"{path}/sep", "must be non-empty text")
    elif op == "lookup":
        _require_keys(params, path, {"table", "default"}, set())
        table = params["table"]
        if not isinstance(table, dict):
            raise _fail(f"{path}/table", "must be an object")
        depths = set()
        for key, value in table.items():
            depth = _text_or_list(value)
            if not isinstance(key, str) or depth is None:
                raise _fail(f"{path}/table", "entries must map text to text or lists of text")
            depths.add(depth)
        if len(depths) > 1:
            raise _fail(f"{path}/table", "mixed value depths")
        default_depth = _text_or_list(params["default"])
        if default_depth is None:
            raise _fail(f"{path}/default", "must be text or a list of text")
        if depths and default_depth not in depths:
            raise _fail(f"{path}/default", "depth differs from table values")
    return dict(params)


# ---------------------------------------------------------------------------
# validation and depth inference
# ---------------------------------------------------------------------------


def _native_depth(proc: Processor) -> int:
    if proc.op == "const":
        return depth_of(proc.params["value"])
    if proc.op == "split":
        return 1
    if proc.op == "lookup":
        return depth_of(proc.params["default"])
    return 0  # concat, uppercase


def _resolve(graph: FlowGraph, ref: WireRef) -> None:
    if ref.kind == "input":
        if graph.input_port(ref.name) is None:
            raise UnknownSource(str(ref))
    else:
        if graph.processor(ref.name) is None:
            raise UnknownSource(str(ref))


def _find_cycle(graph: FlowGraph) -> list[str]:
    """Return one dependency cycle's processor names in order, or []."""
    deps = {
        proc.name: [ref.name for ref in proc.inputs.values() if ref.kind == "processor"]
        for proc in graph.processors
    }
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {name: WHITE for name in deps}
    stack: list[str] = []

    def visit(name: str) -> list[str] | None:
        color[name] = GRAY
        stack.append(name)
        for dep in deps[name]:
            if color[dep] == GRAY:
                return stack[stack.index(dep):]
            if color[dep] == WHITE:
                found = visit(dep)
                if found is not None:
                    return found
        stack.pop()
        color[name] = BLACK
        return None

    for proc in graph.processors:
        if color[proc.name] == WHITE:
            found = visit(proc.name)
            if found is not None:
                return found
    return []


def _topological_order(graph: FlowGraph) -> list[Processor]:
    deps = {
        proc.name: {ref.name for ref in proc.inputs.values() if ref.kind == "processor"}
        for proc in graph.processors
    }
    sorter = TopologicalSorter(deps)
    try:
        order = list(sorter.static_order())
    except _GraphCycleError:
        cycle = _find_cycle(graph)
        raise CycleError(cycle) from None
    by_name = {proc.name: proc for proc in graph.processors}
    return [by_name[name] for name in order]


def _infer_depths(graph: FlowGraph) -> dict[str, int]:
    """Depth of every wire source, keyed by wireref string.

    Performs the full signature/arity, resolution, cycle, and depth checks,
    so a successful return means the graph is executable.
    """
    for proc in graph.processors:
        expected = _OP_ARGS[proc.op]
        got = frozenset(proc.inputs)
        if got != expected:
            raise BadSignature(
                proc.name,
                f"op {proc.op} expects arguments {sorted(expected)}, got {sorted(got)}",
            )
        for ref in proc.inputs.values():
            _resolve(graph, ref)
    for out in graph.outputs:
        _resolve(graph, out.source)

    depths: dict[str, int] = {f"inputs.{port.name}": port.depth for port in graph.inputs}
    for proc in _topological_order(graph):
        iterating = [arg for arg, ref in proc.inputs.items() if depths[str(ref)] == 1]
        if len(iterating) > 1:
            raise BadSignature(proc.name, "more than one depth-1 argument")
        depth = _native_depth(proc) + (1 if iterating else 0)
        if depth > 1:
            raise DepthOverflow(f"processor {proc.name}")
        depths[f"{proc.name}.out"] = depth
    return depths


def validate(graph: FlowGraph) -> None:
    """Confirm the graph is executable: acyclic, every wire resolvable,
    signatures/arity correct, and no wiring that would exceed depth 1."""
    _infer_depths(graph)


def interface(graph: FlowGraph) -> tuple[tuple[PortSpec, ...], tuple[PortSpec, ...]]:
    """The graph's input specs (verbatim) and output specs (depths inferred)."""
    depths = _infer_depths(graph)
    outputs = tuple(
        PortSpec(name=out.name, depth=depths[str(out.source)]) for out in graph.outputs
    )
    return graph.inputs, outputs


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _scalar_apply(proc: Processor, args: dict[str, str]) -> Value:
    op = proc.op
    if op == "const":
        return proc.params["value"]
    if op == "concat":
        return args["a"] + proc.params.get("sep", "") + args["b"]
    if op == "uppercase":
        return args["x"].upper()
    if op == "split":
        return args["x"].split(proc.params["sep"])
    if op == "lookup":
        table = proc.params["table"]
        key = args["key"]
        return table[key] if key in table else proc.params["default"]
    raise AssertionError(f"unreachable op {op!r}")


def _apply(proc: Processor, args: dict[str, Value]) -> Value:
    iterating = [arg for arg, value in args.items() if isinstance(value, list)]
    if not iterating:
        return _scalar_apply(proc, args)
    arg = iterating[0]
    results = []
    for element in args[arg]:
        slot = dict(args)
        slot[arg] = element
        results.append(_scalar_apply(proc, slot))
    return results


def execute(graph: FlowGraph, bindings: Mapping[str, Value]) -> dict[str, Value]:
    """Evaluate the graph over bound input values.

    The graph must validate, and bindings must supply every input port at its
    declared depth; under those preconditions execution is total and
    deterministic. Returns output port name -> value.
    """
    validate(graph)
    values: dict[str, Value] = {}
    for port in graph.inputs:
        try:
            value = bindings[port.name]
        except KeyError:
            raise ValueError(f"missing binding for input port {port.name!r}") from None
        if depth_of(value) != port.depth:
            raise ValueError(
                f"binding for {port.name!r} has depth {depth_of(value)}, expected {port.depth}"
            )
        values[f"inputs.{port.name}"] = value

    for proc in _topological_order(graph):
        args = {arg: values[str(ref)] for arg, ref in proc.inputs.items()}
        values[f"{proc.name}.out"] = _apply(proc, args)

    return {out.name: values[str(out.source)] for out in graph.outputs}

"""Netlist model: blocks, connectors, external pins, validation, YAML I/O.

A netlist is the structural twin of the chassis: block declarations, the
connectors between ports, and the five external input and output pins.
Ports are named ``<block-id>.<in1|in2|out1|out2>``; the chassis boundary
uses ``ext.in<N>`` and ``ext.out<N>``.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass

import yaml

from .gates import GateKind
from .signals import N_PINS

EXT = "ext"

EXT_INPUTS = tuple(f"in{i}" for i in range(1, N_PINS + 1))
EXT_OUTPUTS = tuple(f"out{i}" for i in range(1, N_PINS + 1))


class NetlistError(Exception):
    pass


class NetlistParseError(NetlistError):
    """The document does not match the netlist schema."""


class NetlistValidationError(NetlistError):
    """The netlist structure violates a wiring invariant."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True, order=True)
class Port:
    block: str  # block id, or "ext" for the chassis boundary
    name: str  # in1/in2/out1/out2, or inN/outN on ext

    def __str__(self) -> str:
        return f"{self.block}.{self.name}"

    @classmethod
    def parse(cls, text: str) -> "Port":
        parts = text.split(".")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise NetlistParseError(f"bad port name {text!r}: expected '<block>.<port>'")
        return cls(parts[0], parts[1])


@dataclass(frozen=True)
class Connector:
    source: Port
    dest: Port

    def __str__(self) -> str:
        return f"{self.source} -> {self.dest}"


@dataclass(frozen=True)
class BlockDecl:
    id: str
    kind: GateKind


@dataclass(frozen=True)
class Netlist:
    name: str
    blocks: tuple[BlockDecl, ...]
    connectors: tuple[Connector, ...]
    inputs: tuple[str, ...] = EXT_INPUTS
    outputs: tuple[str, ...] = EXT_OUTPUTS

    def block_map(self) -> dict[str, BlockDecl]:
        return {b.id: b for b in self.blocks}

    def driver_of(self) -> dict[Port, Port]:
        """Destination port -> the source port wired to it."""
        return {c.dest: c.source for c in self.connectors}

    def dest_of(self) -> dict[Port, Port]:
        """Source port -> the destination port it drives (fan-out is <= 1)."""
        return {c.source: c.dest for c in self.connectors}


def _is_source_port(net_blocks: dict[str, BlockDecl], port: Port) -> bool:
    """True if the port can drive a connector (ext input or block output)."""
    if port.block == EXT:
        return port.name in EXT_INPUTS
    decl = net_blocks.get(port.block)
    return decl is not None and port.name in decl.kind.output_ports


def _is_dest_port(net_blocks: dict[str, BlockDecl], port: Port) -> bool:
    """True if the port can be driven (ext output or block input)."""
    if port.block == EXT:
        return port.name in EXT_OUTPUTS
    decl = net_blocks.get(port.block)
    return decl is not None and port.name in decl.kind.input_ports


def block_graph(net: Netlist) -> dict[str, set[str]]:
    """Dependency edges between blocks: block id -> ids of blocks feeding it."""
    deps: dict[str, set[str]] = {b.id: set() for b in net.blocks}
    for c in net.connectors:
        if c.dest.block != EXT and c.source.block != EXT:
            deps.setdefault(c.dest.block, set()).add(c.source.block)
    return deps


def validate_netlist(net: Netlist) -> list[str]:
    """Check every wiring invariant; returns one message per violation."""
    violations: list[str] = []

    seen_ids: set[str] = set()
    for b in net.blocks:
        if b.id == EXT:
            violations.append(f"block id {EXT!r} is reserved for the chassis boundary")
        if b.id in seen_ids:
            violations.append(f"duplicate block id {b.id!r}")
        seen_ids.add(b.id)
    blocks = net.block_map()

    if tuple(net.inputs) != EXT_INPUTS:
        violations.append(
            f"external inputs must be exactly {list(EXT_INPUTS)}, got {list(net.inputs)}"
        )
    if tuple(net.outputs) != EXT_OUTPUTS:
        violations.append(
            f"external outputs must be exactly {list(EXT_OUTPUTS)}, got {list(net.outputs)}"
        )

    seen_conn: set[tuple[Port, Port]] = set()
    for c in net.connectors:
        if (c.source, c.dest) in seen_conn:
            violations.append(f"duplicate connector {c}")
        seen_conn.add((c.source, c.dest))
        if not _is_source_port(blocks, c.source):
            violations.append(f"connector {c}: {c.source} is not a drivable source port")
        if not _is_dest_port(blocks, c.dest):
            violations.append(f"connector {c}: {c.dest} is not a valid destination port")

    # Single-driver rule: block inputs and ext outputs take exactly one driver.
    driver_count: dict[Port, int] = {}
    for c in net.connectors:
        driver_count[c.dest] = driver_count.get(c.dest, 0) + 1
    for port, n in sorted(driver_count.items()):
        if n > 1:
            violations.append(f"port {port} is driven by {n} connectors (must be exactly 1)")
    dest_ports = [Port(b.id, p) for b in net.blocks for p in b.kind.input_ports]
    dest_ports += [Port(EXT, name) for name in EXT_OUTPUTS]
    for port in dest_ports:
        if driver_count.get(port, 0) == 0:
            violations.append(f"port {port} has no driver")

    # Fan-out rule: a source port may feed at most one destination.
    fanout: dict[Port, int] = {}
    for c in net.connectors:
        fanout[c.source] = fanout.get(c.source, 0) + 1
    for port, n in sorted(fanout.items()):
        if n > 1:
            violations.append(
                f"port {port} drives {n} connectors (fan-out requires a SPLITTER)"
            )

    try:
        graphlib.TopologicalSorter(block_graph(net)).prepare()
    except graphlib.CycleError as exc:
        cycle = " -> ".join(exc.args[1])
        violations.append(f"connector graph has a cycle: {cycle}")

    return violations


def _require(doc: dict, key: str, typ: type) -> object:
    if key not in doc:
        raise NetlistParseError(f"missing top-level key {key!r}")
    value = doc[key]
    if not isinstance(value, typ):
        raise NetlistParseError(f"key {key!r}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def parse_netlist(text: str) -> Netlist:
    """Parse a YAML netlist document without validating the wiring."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise NetlistParseError(f"not a YAML document: {exc}") from exc
    if doc is None:
        raise NetlistParseError("empty document")
    if not isinstance(doc, dict):
        raise NetlistParseError("top level must be a mapping")

    name = _require(doc, "name", str)
    blocks = []
    for i, entry in enumerate(_require(doc, "blocks", list)):
        if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
            raise NetlistParseError(f"blocks[{i}]: expected a mapping with 'id' and 'kind'")
        try:
            kind = GateKind(str(entry["kind"]))
        except ValueError:
            raise NetlistParseError(
                f"blocks[{i}]: unknown kind {entry['kind']!r}"
            ) from None
        blocks.append(BlockDecl(str(entry["id"]), kind))
    connectors = []
    for i, entry in enumerate(_require(doc, "connectors", list)):
        if not isinstance(entry, dict) or "from" not in entry or "to" not in entry:
            raise NetlistParseError(f"connectors[{i}]: expected a mapping with 'from' and 'to'")
        connectors.append(Connector(Port.parse(str(entry["from"])), Port.parse(str(entry["to"]))))
    inputs = tuple(str(x) for x in _require(doc, "inputs", list))
    outputs = tuple(str(x) for x in _require(doc, "outputs", list))

    return Netlist(name, tuple(blocks), tuple(connectors), inputs, outputs)


def load_netlist(text: str) -> Netlist:
    """Parse and validate a netlist document."""
    net = parse_netlist(text)
    violations = validate_netlist(net)
    if violations:
        raise NetlistValidationError(violations)
    return net


def read_netlist(path) -> Netlist:
    with open(path, encoding="utf-8") as fh:
        return load_netlist(fh.read())


def dump_netlist(net: Netlist) -> str:
    doc = {
        "name": net.name,
        "blocks": [{"id": b.id, "kind": b.kind.value} for b in net.blocks],
        "connectors": [{"from": str(c.source), "to": str(c.dest)} for c in net.connectors],
        "inputs": list(net.inputs),
        "outputs": list(net.outputs),
    }
    return yaml.safe_dump(doc, sort_keys=False)

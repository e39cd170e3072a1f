"""Pure Boolean netlist evaluation in topological order.

This is the ground-truth evaluator: no event queues, no latches, just each
block's Boolean function applied once along a topological order. The event
engine and the emulated board are both checked against it.
"""

from __future__ import annotations

import graphlib

from .gates import GateKind, eval_gate
from .netlist import EXT, EXT_OUTPUTS, Netlist, Port, block_graph, validate_netlist
from .netlist import NetlistValidationError
from .signals import N_PINS, Level, Vector


def topo_order(net: Netlist) -> list[str]:
    """Block ids ordered so every block follows the blocks feeding it."""
    sorter = graphlib.TopologicalSorter(block_graph(net))
    return list(sorter.static_order())


def port_levels(net: Netlist, v: Vector) -> dict[Port, Level]:
    """Level of every port in the netlist for input vector ``v``."""
    if len(v) != N_PINS:
        raise ValueError(f"input vector must have {N_PINS} bits, got {len(v)}")
    levels: dict[Port, Level] = {}
    for i in range(N_PINS):
        levels[Port(EXT, f"in{i + 1}")] = v[i]

    driver = net.driver_of()
    blocks = net.block_map()
    for block_id in topo_order(net):
        decl = blocks[block_id]
        inputs = []
        for port_name in decl.kind.input_ports:
            port = Port(block_id, port_name)
            levels[port] = levels[driver[port]]
            inputs.append(levels[port])
        if decl.kind is GateKind.SPLITTER:
            outputs = (inputs[0], inputs[0])
        else:
            outputs = (eval_gate(decl.kind, tuple(inputs)),)
        for port_name, level in zip(decl.kind.output_ports, outputs):
            levels[Port(block_id, port_name)] = level

    for name in EXT_OUTPUTS:
        port = Port(EXT, name)
        levels[port] = levels[driver[port]]
    return levels


def oracle_eval(net: Netlist, v: Vector) -> Vector:
    """External output vector of ``net`` under input ``v``."""
    violations = validate_netlist(net)
    if violations:
        raise NetlistValidationError(violations)
    levels = port_levels(net, v)
    return tuple(levels[Port(EXT, name)] for name in EXT_OUTPUTS)

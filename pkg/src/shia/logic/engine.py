"""Event-driven execution of the block state machines to quiescence.

Signal-change events travel along connectors and are delivered block by
block in topological rank order; a block receiving events latches them all
(in port-index order) and re-evaluates its output side once, so each
connector carries at most one event per input-change batch. Propagation
runs until no events remain (quiescence).
"""

from __future__ import annotations

import graphlib
import heapq

from .gates import BlockInstance, latch_input, refresh_outputs
from .netlist import EXT, Netlist, NetlistValidationError, Port, block_graph, validate_netlist
from .signals import ALL_LOW, N_PINS, Level, Vector


class NonQuiescentError(RuntimeError):
    """Event propagation exceeded the safety cap without settling."""


class Simulation:
    """Live execution state for one netlist.

    The caller is responsible for validating the netlist first; `settle`
    does so. Construction performs the power-on pass: every latch starts
    low, block outputs are evaluated from the low latches, and the
    resulting levels are propagated once so the network starts consistent.
    """

    def __init__(self, net: Netlist):
        self.net = net
        self._blocks: dict[str, BlockInstance] = {
            b.id: BlockInstance.powered_on(b.id, b.kind) for b in net.blocks
        }
        self._ext_in: list[Level] = list(ALL_LOW)
        self._ext_out: list[Level] = list(ALL_LOW)
        self._dest_of: dict[Port, Port] = net.dest_of()
        self._rank = self._block_ranks(net)
        # Pending events grouped per destination block, plus an activation
        # heap ordered by (topological rank, arrival sequence).
        self._pending: dict[str, list[tuple[str, Level]]] = {}
        self._active: list[tuple[int, int, str]] = []
        self._seq = 0
        self._cap = max(1, 10 * len(net.connectors))
        self._events = 0
        self.last_event_count = 0

        for block in list(self._blocks.values()):
            for port_name, level in zip(block.kind.output_ports, block.output_state):
                self._route(Port(block.id, port_name), level)
        for i in range(N_PINS):
            self._route(Port(EXT, f"in{i + 1}"), Level.LOW)
        self._run()

    @staticmethod
    def _block_ranks(net: Netlist) -> dict[str, int]:
        # Cyclic netlists (rejected by validation, but constructible) fall
        # back to a flat rank, i.e. plain FIFO order; the event cap then
        # catches any oscillation.
        try:
            order = graphlib.TopologicalSorter(block_graph(net)).static_order()
            return {block_id: i for i, block_id in enumerate(order)}
        except graphlib.CycleError:
            return {b.id: 0 for b in net.blocks}

    def _route(self, source: Port, level: Level) -> None:
        dest = self._dest_of.get(source)
        if dest is not None:
            self._post(dest, level)

    def _post(self, dest: Port, level: Level) -> None:
        if dest.block == EXT:
            self._ext_out[int(dest.name[3:]) - 1] = level
            self._events += 1
            return
        if dest.block not in self._pending:
            self._pending[dest.block] = []
            self._seq += 1
            heapq.heappush(self._active, (self._rank[dest.block], self._seq, dest.block))
        self._pending[dest.block].append((dest.name, level))

    def _run(self) -> None:
        budget = self._cap
        while self._active:
            _, _, block_id = heapq.heappop(self._active)
            events = self._pending.pop(block_id)
            events.sort(key=lambda e: e[0])  # port-index order for same-batch events
            block = self._blocks[block_id]
            for port, level in events:
                block = latch_input(block, port, level)
                self._events += 1
                budget -= 1
                if budget < 0:
                    raise NonQuiescentError(
                        f"netlist {self.net.name!r} did not settle within {self._cap} events"
                    )
            block, emitted = refresh_outputs(block)
            self._blocks[block_id] = block
            for port_name, level in emitted:
                self._route(Port(block_id, port_name), level)
        self.last_event_count = self._events
        self._events = 0

    def drive(self, pin: int, level: Level) -> None:
        """Apply one external input event and propagate to quiescence."""
        if not 1 <= pin <= N_PINS:
            raise ValueError(f"pin out of range: {pin}")
        self._ext_in[pin - 1] = level
        self._route(Port(EXT, f"in{pin}"), level)
        self._run()

    def drive_vector(self, v: Vector) -> None:
        """Apply a whole input vector as one batch and propagate."""
        if len(v) != N_PINS:
            raise ValueError(f"input vector must have {N_PINS} bits, got {len(v)}")
        for i, level in enumerate(v):
            self._ext_in[i] = level
            self._route(Port(EXT, f"in{i + 1}"), level)
        self._run()

    def inputs(self) -> Vector:
        return tuple(self._ext_in)

    def outputs(self) -> Vector:
        return tuple(self._ext_out)

    def snapshot(self) -> dict[str, Level]:
        """Level of every port, external and internal, keyed by port name."""
        levels: dict[str, Level] = {}
        for i in range(N_PINS):
            levels[f"ext.in{i + 1}"] = self._ext_in[i]
            levels[f"ext.out{i + 1}"] = self._ext_out[i]
        for block in self._blocks.values():
            for name, level in zip(block.kind.input_ports, block.input_state):
                levels[f"{block.id}.{name}"] = level
            for name, level in zip(block.kind.output_ports, block.output_state):
                levels[f"{block.id}.{name}"] = level
        return levels


def settle(net: Netlist, v: Vector) -> tuple[Vector, dict[str, Level]]:
    """Drive a validated netlist to ``v`` from power-on and run to quiescence.

    Returns the external output vector and the level of every port.
    """
    violations = validate_netlist(net)
    if violations:
        raise NetlistValidationError(violations)
    sim = Simulation(net)
    sim.drive_vector(v)
    return sim.outputs(), sim.snapshot()

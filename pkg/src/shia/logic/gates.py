"""Logic block kinds, their Boolean functions, and per-block event stepping.

Each block behaves like a small two-region state machine: incoming signal
events latch input values, and the output side re-evaluates the block
function, emitting an event out of each output port whose level changed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .signals import Level


class GateKind(enum.Enum):
    NAND = "NAND"
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    XOR = "XOR"
    SPLITTER = "SPLITTER"

    @property
    def n_inputs(self) -> int:
        return 1 if self in (GateKind.NOT, GateKind.SPLITTER) else 2

    @property
    def n_outputs(self) -> int:
        return 2 if self is GateKind.SPLITTER else 1

    @property
    def input_ports(self) -> tuple[str, ...]:
        return _PORT_NAMES_IN[: self.n_inputs]

    @property
    def output_ports(self) -> tuple[str, ...]:
        return _PORT_NAMES_OUT[: self.n_outputs]


_PORT_NAMES_IN = ("in1", "in2")
_PORT_NAMES_OUT = ("out1", "out2")


class ArityError(ValueError):
    """A gate was given the wrong number of inputs."""


class UnknownPortError(ValueError):
    """An event was addressed to a port the block does not have."""


def eval_gate(kind: GateKind, inputs: tuple[Level, ...]) -> Level:
    """Boolean function of a gate kind. SPLITTER is not a gate and is rejected."""
    if kind is GateKind.SPLITTER:
        raise ArityError("SPLITTER copies its input to two outputs; it has no gate function")
    if len(inputs) != kind.n_inputs:
        raise ArityError(f"{kind.value} takes {kind.n_inputs} input(s), got {len(inputs)}")
    if kind is GateKind.NOT:
        return ~inputs[0]
    a, b = inputs
    if kind is GateKind.NAND:
        # High unless both inputs are high.
        return ~Level(a & b)
    if kind is GateKind.AND:
        return Level(a & b)
    if kind is GateKind.OR:
        return Level(a | b)
    return Level(a ^ b)  # XOR


def _outputs_of(kind: GateKind, inputs: tuple[Level, ...]) -> tuple[Level, ...]:
    if kind is GateKind.SPLITTER:
        return (inputs[0], inputs[0])
    return (eval_gate(kind, inputs),)


@dataclass(frozen=True)
class BlockInstance:
    """One placed block: identity, kind, latched inputs, current outputs."""

    id: str
    kind: GateKind
    input_state: tuple[Level, ...]
    output_state: tuple[Level, ...]

    @classmethod
    def powered_on(cls, block_id: str, kind: GateKind) -> "BlockInstance":
        """Power-on state: all input latches low, outputs evaluated from them."""
        inputs = (Level.LOW,) * kind.n_inputs
        return cls(block_id, kind, inputs, _outputs_of(kind, inputs))


def latch_input(block: BlockInstance, port: str, level: Level) -> BlockInstance:
    """Update one input latch without re-evaluating the output side."""
    ports = block.kind.input_ports
    if port not in ports:
        raise UnknownPortError(
            f"block {block.id!r} ({block.kind.value}) has no input port {port!r}"
        )
    latched = list(block.input_state)
    latched[ports.index(port)] = level
    return replace(block, input_state=tuple(latched))


def refresh_outputs(block: BlockInstance) -> tuple[BlockInstance, list[tuple[str, Level]]]:
    """Re-evaluate the output side from the latched inputs.

    Returns the updated block and one (port, level) event per output port
    whose level changed.
    """
    new_outputs = _outputs_of(block.kind, block.input_state)
    emitted = [
        (name, level)
        for name, old, level in zip(block.kind.output_ports, block.output_state, new_outputs)
        if old != level
    ]
    return replace(block, output_state=new_outputs), emitted


def step_block(
    block: BlockInstance, port: str, level: Level
) -> tuple[BlockInstance, list[tuple[str, Level]]]:
    """Deliver one signal event to an input port.

    The addressed latch is updated and the output side re-evaluates; an event
    is emitted out of each output port whose level changed. Delivering the
    value already latched therefore emits nothing.
    """
    return refresh_outputs(latch_input(block, port, level))

"""Emulated hardware-side server.

A virtual GPIO bank stands in for the physical board: command frames set
input GPIOs, the embedded circuit is re-evaluated as pure Boolean logic,
and every output pin whose level changes is reported back immediately,
interrupt-style. The serial line is polled on a fixed cadence (default
10 Hz). Faults can be injected between the circuit and the reported
outputs to give the harness discrepancies to detect.

The circuit is deliberately evaluated with the pure Boolean evaluator and
not the event engine, so an end-to-end comparison against the model server
exercises two independent evaluation paths.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

from .clock import Clock, Timer
from .logic.netlist import Netlist, NetlistValidationError, validate_netlist
from .logic.oracle import oracle_eval
from .logic.signals import ALL_LOW, N_PINS, Level, Vector
from .protocol import FrameStream, ProtocolError, decode_pin_message, encode_pin_message
from .transport import StreamClosedError

logger = logging.getLogger(__name__)


class FaultKind(enum.Enum):
    STUCK_LOW = "stuck_low"
    STUCK_HIGH = "stuck_high"
    INVERTED = "inverted"
    SWAP_WIRING = "swap_wiring"


@dataclass(frozen=True)
class FaultSpec:
    kind: FaultKind
    pin: int
    pin_b: int | None = None  # second pin, swap_wiring only

    def __post_init__(self):
        if not 1 <= self.pin <= N_PINS:
            raise ValueError(f"fault pin must be 1..{N_PINS}, got {self.pin}")
        if self.kind is FaultKind.SWAP_WIRING:
            if self.pin_b is None or not 1 <= self.pin_b <= N_PINS or self.pin_b == self.pin:
                raise ValueError("swap_wiring needs two distinct pins in range")
        elif self.pin_b is not None:
            raise ValueError(f"{self.kind.value} takes a single pin")

    def pins(self) -> tuple[int, ...]:
        return (self.pin,) if self.pin_b is None else (self.pin, self.pin_b)

    @classmethod
    def parse(cls, text: str) -> "FaultSpec":
        """Parse 'kind:pin' or 'swap_wiring:pinA:pinB' (CLI form)."""
        parts = text.split(":")
        try:
            kind = FaultKind(parts[0])
        except ValueError:
            raise ValueError(f"unknown fault kind {parts[0]!r}") from None
        try:
            pins = [int(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"bad fault pins in {text!r}") from None
        if kind is FaultKind.SWAP_WIRING:
            if len(pins) != 2:
                raise ValueError("swap_wiring needs two pins, e.g. swap_wiring:1:2")
            return cls(kind, pins[0], pins[1])
        if len(pins) != 1:
            raise ValueError(f"{kind.value} needs exactly one pin")
        return cls(kind, pins[0])

    def __str__(self) -> str:
        return ":".join([self.kind.value] + [str(p) for p in self.pins()])


class DuplicateFaultError(ValueError):
    """A pin already carries a fault."""


@dataclass(frozen=True)
class GpioMap:
    """Bijection between virtual GPIO numbers and chassis pin roles."""

    input_gpio: tuple[int, ...]  # chassis input pin 1..5 -> GPIO number
    output_gpio: tuple[int, ...]  # chassis output pin 1..5 -> GPIO number

    def __post_init__(self):
        if len(self.input_gpio) != N_PINS or len(self.output_gpio) != N_PINS:
            raise ValueError(f"GPIO map must cover all {N_PINS} inputs and outputs")
        numbers = list(self.input_gpio) + list(self.output_gpio)
        if len(set(numbers)) != len(numbers):
            raise ValueError("GPIO numbers must be distinct across the map")

    @classmethod
    def default(cls) -> "GpioMap":
        # Inputs on GPIO 21..25; outputs default to GPIO 1..5.
        return cls(tuple(range(21, 21 + N_PINS)), tuple(range(1, 1 + N_PINS)))


class BoardServer:
    """One emulated board: circuit, GPIO bank, poll loop, fault set."""

    def __init__(
        self,
        circuit: Netlist,
        clock: Clock,
        *,
        gpio_map: GpioMap | None = None,
        faults: tuple[FaultSpec, ...] = (),
        on_log=None,
    ):
        violations = validate_netlist(circuit)
        if violations:
            raise NetlistValidationError(violations)
        self.circuit = circuit
        self.clock = clock
        self.gpio_map = gpio_map or GpioMap.default()
        self.faults: list[FaultSpec] = []
        self._on_log = on_log
        self.log_lines: list[str] = []

        for fault in faults:
            self.inject_fault(fault)

        self._inputs: list[Level] = list(ALL_LOW)
        self._outputs: list[Level] = list(self._evaluate())
        self.gpio_levels: dict[int, Level] = {}
        for pin in range(1, N_PINS + 1):
            self.gpio_levels[self.gpio_map.input_gpio[pin - 1]] = Level.LOW
            self.gpio_levels[self.gpio_map.output_gpio[pin - 1]] = self._outputs[pin - 1]

        self._endpoint = None
        self._framer = FrameStream()
        self._tick_timer: Timer | None = None
        self._period_ms = 100
        self._next_tick = 0
        self._running = False

    # -- state views ---------------------------------------------------------

    @property
    def led_view(self) -> Vector:
        """Output LED states, lit for each active output condition."""
        return tuple(self._outputs)

    @property
    def input_levels(self) -> Vector:
        return tuple(self._inputs)

    @property
    def running(self) -> bool:
        return self._running

    def _log(self, line: str) -> None:
        self.log_lines.append(line)
        logger.info("%s", line)
        if self._on_log is not None:
            self._on_log(line)

    # -- evaluation ----------------------------------------------------------

    def _evaluate(self) -> Vector:
        raw = list(oracle_eval(self.circuit, tuple(self._inputs)))
        for fault in self.faults:
            if fault.kind is FaultKind.STUCK_LOW:
                raw[fault.pin - 1] = Level.LOW
            elif fault.kind is FaultKind.STUCK_HIGH:
                raw[fault.pin - 1] = Level.HIGH
            elif fault.kind is FaultKind.INVERTED:
                raw[fault.pin - 1] = ~raw[fault.pin - 1]
            else:  # swap_wiring: fault pins are disjoint from all other faults
                a, b = fault.pin - 1, fault.pin_b - 1
                raw[a], raw[b] = raw[b], raw[a]
        return tuple(raw)

    def inject_fault(self, fault: FaultSpec) -> None:
        """Activate a fault; it applies to every subsequent evaluation."""
        taken = {pin for f in self.faults for pin in f.pins()}
        overlap = [pin for pin in fault.pins() if pin in taken]
        if overlap:
            raise DuplicateFaultError(f"pin(s) {overlap} already carry a fault")
        self.faults.append(fault)

    # -- command handling ------------------------------------------------------

    def apply_command(self, pin: int, level: Level) -> list[bytes]:
        """Set the mapped input GPIO, re-evaluate, and report output changes.

        Returns one response frame per output pin whose level changed, in
        pin order.
        """
        gpio = self.gpio_map.input_gpio[pin - 1]
        self.gpio_levels[gpio] = level
        self._inputs[pin - 1] = level
        self._log(f"RX {pin}{int(level)} -> GPIO{gpio} {'HIGH' if level else 'LOW'}")

        new_outputs = self._evaluate()
        responses = []
        for out_pin in range(1, N_PINS + 1):
            if new_outputs[out_pin - 1] != self._outputs[out_pin - 1]:
                frame = encode_pin_message(out_pin, new_outputs[out_pin - 1])
                responses.append(frame)
                self._log(f"TX {frame.decode('ascii')}")
            self.gpio_levels[self.gpio_map.output_gpio[out_pin - 1]] = new_outputs[out_pin - 1]
        self._outputs = list(new_outputs)
        return responses

    def full_state_report(self) -> list[bytes]:
        """Current level of every output pin, in pin order 1..5."""
        return [
            encode_pin_message(pin, self._outputs[pin - 1]) for pin in range(1, N_PINS + 1)
        ]

    # -- serving ---------------------------------------------------------------

    def serve(self, endpoint, poll_hz: int = 10, send_initial_report: bool = True) -> None:
        """Start polling the endpoint at ``poll_hz``; returns immediately.

        The loop runs on the shared clock. On session start the full output
        state is reported so the model side can synchronise its lamps.
        """
        if poll_hz <= 0:
            raise ValueError("poll_hz must be > 0")
        self._endpoint = endpoint
        self._period_ms = max(1, round(1000 / poll_hz))
        self._running = True
        if send_initial_report:
            try:
                for frame in self.full_state_report():
                    self._log(f"TX {frame.decode('ascii')}")
                    endpoint.write(frame)
            except StreamClosedError:
                self._log("session closed")
                self._running = False
                return
        self._next_tick = self.clock.now()
        self._tick_timer = self.clock.call_at(self._next_tick, self._tick)

    def stop(self) -> None:
        self._running = False
        if self._tick_timer is not None:
            self._tick_timer.cancel()
            self._tick_timer = None

    def _tick(self) -> None:
        if not self._running:
            return
        try:
            data = self._endpoint.read()
        except StreamClosedError:
            self._log("session closed")
            self.stop()
            return
        responses: list[bytes] = []
        for frame in self._framer.push(data):
            try:
                pin, level = decode_pin_message(frame)
            except ProtocolError as exc:
                self._log(f"RX {frame.decode('ascii', 'backslashreplace')} -> protocol error: {exc}")
                continue
            responses.extend(self.apply_command(pin, level))
        if responses:
            try:
                self._endpoint.write(b"".join(responses))
            except StreamClosedError:
                self._log("session closed")
                self.stop()
                return
        # Fixed cadence from the original grid, immune to callback jitter.
        self._next_tick += self._period_ms
        self._tick_timer = self.clock.call_at(self._next_tick, self._tick)

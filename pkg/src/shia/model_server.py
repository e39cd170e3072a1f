"""Model-side harness server.

Owns the authoritative harness state and runs three cooperating regions:

* listen - consumes operator pin/mode events. In model-only mode (MOM) a
  pin event stimulates the in-process chassis model directly; in model
  replacement mode (MRM) it prepares a two-byte command and hands it to
  the transmit region instead.
* transmit - writes prepared command frames to the transport and signals
  the receive region to expect a reply.
* receive - waits a configurable delay for the board to process the
  change, then drains and decodes response frames into the output
  attributes, retrying until a reply window expires.

All region activity runs on the shared clock's thread: external callers
post events via ``post_event`` (from the clock thread) or ``clock.post``.
Internal events are processed run-to-completion in FIFO order.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass

from .clock import Clock, Timer
from .logic.engine import Simulation
from .logic.netlist import Netlist, NetlistValidationError, validate_netlist
from .logic.signals import ALL_LOW, N_PINS, Level, Vector
from .protocol import FrameStream, ProtocolError, decode_pin_message, encode_pin_message
from .transport import StreamClosedError

logger = logging.getLogger(__name__)


class Mode(enum.Enum):
    MOM = "MOM"  # model only: the in-process chassis model is exercised
    MRM = "MRM"  # model replacement: stimuli and readings go to the board


class EventKind(enum.Enum):
    PIN_HIGH = "pin_high"
    PIN_LOW = "pin_low"
    SET_MODE = "set_mode"
    # Internal region-to-region events; external callers never need them.
    UPDATE_OUTGOING = "update_outgoing"
    WAIT_FOR_REPLY = "wait_for_reply"


@dataclass(frozen=True)
class HarnessEvent:
    kind: EventKind
    pin: int | None = None
    mode: Mode | None = None

    def __post_init__(self):
        if self.kind in (EventKind.PIN_HIGH, EventKind.PIN_LOW):
            if self.pin is None or not 1 <= self.pin <= N_PINS:
                raise ValueError(f"pin event needs a pin in 1..{N_PINS}, got {self.pin}")
        if self.kind is EventKind.SET_MODE and self.mode is None:
            raise ValueError("set_mode event needs a mode")


def pin_high(pin: int) -> HarnessEvent:
    return HarnessEvent(EventKind.PIN_HIGH, pin=pin)


def pin_low(pin: int) -> HarnessEvent:
    return HarnessEvent(EventKind.PIN_LOW, pin=pin)


def pin_event(pin: int, level: Level) -> HarnessEvent:
    return pin_high(pin) if level else pin_low(pin)


def set_mode(mode: Mode) -> HarnessEvent:
    return HarnessEvent(EventKind.SET_MODE, mode=mode)


@dataclass(frozen=True)
class Snapshot:
    """Consistent point-in-time view feeding the operator panel."""

    mode: Mode
    inputs: Vector
    outputs: Vector
    internals: dict[str, Level] | None  # only available in MOM
    status: str
    listen_state: str
    tx_state: str
    rx_state: str


class SessionError(RuntimeError):
    """The harness cannot do what was asked in its current session state."""


# Region state names (reported in snapshots).
LISTEN_IDLE, LISTEN_MONITOR = "idle", "monitor"
TX_MODEL_ONLY, TX_INITIALISE, TX_WAIT, TX_SEND = (
    "model_only",
    "initialise",
    "wait_for_change",
    "send_changes",
)
RX_MODEL_ONLY, RX_INITIALISE, RX_IDLE, RX_DELAY, RX_RECEIVE = (
    "model_only",
    "initialise",
    "idle",
    "delay",
    "receive_changes",
)

STATUS_IDLE = "idle"
STATUS_OK = "ok"
STATUS_REPLY_TIMEOUT = "reply-timeout"
STATUS_SESSION_FAULT = "session-fault"

# Floor on the reply window so short delays still cover one board poll
# period before a timeout is surfaced.
MIN_REPLY_WINDOW_MS = 250


class ModelServer:
    def __init__(
        self,
        net: Netlist,
        clock: Clock,
        *,
        delay_ms: int = 500,
        reply_timeout_ms: int | None = None,
        rx_poll_ms: int = 25,
    ):
        violations = validate_netlist(net)
        if violations:
            raise NetlistValidationError(violations)
        if delay_ms < 0:
            raise ValueError("delay_ms must be >= 0")
        self.net = net
        self.clock = clock
        self.delay_ms = delay_ms
        self.reply_timeout_ms = (
            reply_timeout_ms
            if reply_timeout_ms is not None
            else max(2 * delay_ms, MIN_REPLY_WINDOW_MS)
        )
        self.rx_poll_ms = max(1, rx_poll_ms)

        self._sim = Simulation(net)
        self._mode = Mode.MOM
        self._inputs: list[Level] = list(ALL_LOW)
        # Output lamps stay dark until the server is started; start() runs
        # the power-on settle pass.
        self._outputs: list[Level] = list(ALL_LOW)
        self._outgoing: deque[bytes] = deque()
        self._listen_state = LISTEN_IDLE
        self._tx_state = TX_MODEL_ONLY
        self._rx_state = RX_MODEL_ONLY
        self._status = STATUS_IDLE

        self._endpoint = None
        self._framer = FrameStream()
        self._queue: deque[HarnessEvent] = deque()
        self._dispatching = False
        self._rx_timer: Timer | None = None
        self._rx_deadline = 0
        self._last_wfr_at = 0
        self.timeout_count = 0
        self._listeners: list = []
        self._last_notified: Snapshot | None = None

    # -- lifecycle ---------------------------------------------------------

    def attach(self, endpoint) -> None:
        """Bind the transport used in MRM; must happen before switching mode."""
        self._endpoint = endpoint

    def start(self) -> None:
        if self._listen_state == LISTEN_MONITOR:
            return
        self._listen_state = LISTEN_MONITOR
        self._outputs = list(self._sim.outputs())
        self._status = STATUS_OK
        self._maybe_notify()

    @property
    def started(self) -> bool:
        return self._listen_state == LISTEN_MONITOR

    @property
    def mode(self) -> Mode:
        return self._mode

    @property
    def status(self) -> str:
        return self._status

    def add_listener(self, fn) -> None:
        """fn(snapshot) is called once per observable state change."""
        self._listeners.append(fn)

    # -- event intake ------------------------------------------------------

    def post_event(self, ev: HarnessEvent) -> None:
        """Queue a harness event; processed run-to-completion in FIFO order.

        Must be invoked on the clock thread (use ``clock.post`` from
        elsewhere).
        """
        if not self.started:
            raise SessionError("server not started")
        self._queue.append(ev)
        if self._dispatching:
            return
        self._dispatching = True
        try:
            while self._queue:
                self._dispatch(self._queue.popleft())
        finally:
            self._dispatching = False
        self._maybe_notify()

    # -- listen region -----------------------------------------------------

    def _dispatch(self, ev: HarnessEvent) -> None:
        if ev.kind in (EventKind.PIN_HIGH, EventKind.PIN_LOW):
            level = Level.HIGH if ev.kind is EventKind.PIN_HIGH else Level.LOW
            self._inputs[ev.pin - 1] = level
            if self._mode is Mode.MOM:
                self._sim.drive(ev.pin, level)
                self._outputs = list(self._sim.outputs())
            else:
                # Transmission is keyed on the event, not on a value change.
                self._outgoing.append(encode_pin_message(ev.pin, level))
                self._queue.append(HarnessEvent(EventKind.UPDATE_OUTGOING))
        elif ev.kind is EventKind.SET_MODE:
            self._set_mode(ev.mode)
        elif ev.kind is EventKind.UPDATE_OUTGOING:
            self._tx_send()
        elif ev.kind is EventKind.WAIT_FOR_REPLY:
            self._rx_wait_for_reply()

    def _set_mode(self, mode: Mode) -> None:
        if mode is self._mode:
            return
        if mode is Mode.MRM:
            if self._endpoint is None:
                raise SessionError("no transport attached; cannot enter MRM")
            self._mode = Mode.MRM
            # Initialise both regions: on an emulated transport, configuring
            # the serial line amounts to adopting the endpoint's config.
            self._tx_state = TX_WAIT
            self._rx_state = RX_IDLE
            self._status = STATUS_OK
            # The board's pin state is unknown at switch time: resynchronise
            # by transmitting every input attribute as a command.
            for pin in range(1, N_PINS + 1):
                self._outgoing.append(encode_pin_message(pin, self._inputs[pin - 1]))
                self._queue.append(HarnessEvent(EventKind.UPDATE_OUTGOING))
        else:
            self._mode = Mode.MOM
            self._cancel_rx_timer()
            self._tx_state = TX_MODEL_ONLY
            self._rx_state = RX_MODEL_ONLY
            self._outgoing.clear()
            # Catch the local model up with the attributes changed in MRM.
            self._sim.drive_vector(tuple(self._inputs))
            self._outputs = list(self._sim.outputs())
            if self._status != STATUS_SESSION_FAULT:
                self._status = STATUS_OK

    # -- transmit region ---------------------------------------------------

    def _tx_send(self) -> None:
        if self._mode is not Mode.MRM or not self._outgoing:
            return
        if self._tx_state == TX_INITIALISE:
            if self._endpoint is None or self._endpoint.closed:
                self._outgoing.popleft()
                return
            self._tx_state = TX_WAIT  # re-initialised
        self._tx_state = TX_SEND
        frame = self._outgoing.popleft()
        try:
            self._endpoint.write(frame)
        except StreamClosedError:
            logger.warning("transmit failed, session fault: %s", frame)
            self._status = STATUS_SESSION_FAULT
            self._tx_state = TX_INITIALISE
            return
        self._tx_state = TX_WAIT
        self._queue.append(HarnessEvent(EventKind.WAIT_FOR_REPLY))

    # -- receive region ----------------------------------------------------

    def _rx_wait_for_reply(self) -> None:
        if self._mode is not Mode.MRM:
            return
        # A reply wait arriving while a previous cycle is pending restarts
        # the delay: the eventual read happens at least delay_ms after the
        # latest transmission and drains the replies of every earlier one.
        self._cancel_rx_timer()
        self._last_wfr_at = self.clock.now()
        self._rx_state = RX_DELAY
        self._rx_timer = self.clock.call_at(self.clock.now() + self.delay_ms, self._rx_delay_done)

    def _cancel_rx_timer(self) -> None:
        if self._rx_timer is not None:
            self._rx_timer.cancel()
            self._rx_timer = None

    def _rx_delay_done(self) -> None:
        self._rx_timer = None
        if self._mode is not Mode.MRM:
            return
        self._rx_state = RX_RECEIVE
        self._rx_deadline = self.clock.now() + self.reply_timeout_ms
        self._rx_attempt_read()
        self._maybe_notify()

    def _rx_attempt_read(self) -> None:
        self._rx_timer = None
        try:
            data = self._endpoint.read()
        except StreamClosedError:
            logger.warning("receive failed, session fault")
            self._status = STATUS_SESSION_FAULT
            self._rx_state = RX_IDLE
            self._maybe_notify()
            return
        frames = self._framer.push(data)
        if frames:
            for frame in frames:
                try:
                    pin, level = decode_pin_message(frame)
                except ProtocolError as exc:
                    logger.warning("protocol error in reply, frame skipped: %s", exc)
                    continue
                self._outputs[pin - 1] = level
            self._status = STATUS_OK
            self._rx_state = RX_IDLE
        elif self.clock.now() >= self._rx_deadline:
            self.timeout_count += 1
            self._status = STATUS_REPLY_TIMEOUT
            logger.warning("no reply within %d ms", self.delay_ms + self.reply_timeout_ms)
            self._rx_state = RX_IDLE
        else:
            self._rx_timer = self.clock.call_at(
                self.clock.now() + self.rx_poll_ms, self._rx_attempt_read
            )
            return
        self._maybe_notify()

    # -- observation -------------------------------------------------------

    def snapshot(self) -> Snapshot:
        internals = dict(self._sim.snapshot()) if self._mode is Mode.MOM else None
        return Snapshot(
            mode=self._mode,
            inputs=tuple(self._inputs),
            outputs=tuple(self._outputs),
            internals=internals,
            status=self._status,
            listen_state=self._listen_state,
            tx_state=self._tx_state,
            rx_state=self._rx_state,
        )

    def _maybe_notify(self) -> None:
        snap = self.snapshot()
        if snap == self._last_notified:
            return
        self._last_notified = snap
        for fn in list(self._listeners):
            fn(snap)

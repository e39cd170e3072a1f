"""End-to-end panel behaviour over a real socket, real clock, loopback board.

Covers the panel side of the verification story: a pin toggle from a
client produces the exact command message on the wire, reaches the board's
virtual GPIO, and the output lamps update only once the reply round trip
(about 500 ms in MRM) completes, while MOM lamps update within the same
broadcast.
"""

import json
import threading
import time

import pytest

from shia.board_server import BoardServer
from shia.clock import RealClock
from shia.model_server import ModelServer
from shia.panel_service import PanelService
from shia.transport import open_loopback
from shia.ws import WsClient

DELAY_MS = 500


class FullStack:
    def __init__(self, net):
        self.clock = RealClock()
        model_ep, board_ep = open_loopback(self.clock, sides=("model", "board"))
        self.board = BoardServer(net, self.clock)
        self.board.serve(board_ep, poll_hz=10)
        self.model = ModelServer(net, self.clock, delay_ms=DELAY_MS)
        self.model.attach(model_ep)
        self.service = PanelService(self.model, self.clock, port=0)
        self._stop = threading.Event()
        self._pump = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        while not self._stop.is_set():
            self.clock.wait_until(self.clock.now() + 25)

    def start(self):
        host, port = self.service.start()
        self.model.start()
        self._pump.start()
        return host, port

    def stop(self):
        self._stop.set()
        self._pump.join(timeout=2)
        self.service.stop()
        self.board.stop()


@pytest.fixture
def stack(reference_net):
    stack = FullStack(reference_net)
    stack.host, stack.port = stack.start()
    yield stack
    stack.stop()


def recv_state(client, timeout=5.0):
    while True:
        msg = json.loads(client.recv_text(timeout))
        if msg["type"] == "state":
            return msg


def test_mom_lamps_update_within_one_broadcast(stack):
    client = WsClient(stack.host, stack.port)
    try:
        initial = recv_state(client)
        client.send_text(json.dumps({"type": "set_pin", "pin": 2, "level": 1}))
        msg = recv_state(client)
        # One broadcast carries both the toggled input and the new outputs.
        assert msg["inputs"][1] == 1
        assert msg["outputs"] != initial["outputs"]
    finally:
        client.close()


def test_mrm_round_trip_reaches_board_and_lags_by_delay(stack):
    client = WsClient(stack.host, stack.port)
    try:
        recv_state(client)
        client.send_text(json.dumps({"type": "set_mode", "mode": "MRM"}))
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline:
            if recv_state(client)["mode"] == "MRM":
                break
        # Let the mode-switch resynchronisation round trip finish.
        time.sleep(1.0)

        sent_at = time.monotonic()
        client.send_text(json.dumps({"type": "set_pin", "pin": 2, "level": 1}))
        input_seen_at = None
        outputs_seen_at = None
        baseline_outputs = None
        deadline = time.monotonic() + 10
        while outputs_seen_at is None and time.monotonic() < deadline:
            msg = recv_state(client, timeout=5.0)
            if msg["inputs"][1] == 1 and input_seen_at is None:
                input_seen_at = time.monotonic()
                baseline_outputs = msg["outputs"]
            elif baseline_outputs is not None and msg["outputs"] != baseline_outputs:
                outputs_seen_at = time.monotonic()

        assert input_seen_at is not None, "input lamp broadcast never arrived"
        assert outputs_seen_at is not None, "output lamp broadcast never arrived"
        # The input lamp reacts quickly; the output lamps only after the
        # reply delay round trip.
        assert input_seen_at - sent_at < 0.4
        assert outputs_seen_at - sent_at >= 0.45
        assert outputs_seen_at - sent_at < 3.0

        # The toggle really drove the virtual GPIO through the wire protocol.
        assert "RX 21 -> GPIO22 HIGH" in stack.board.log_lines
    finally:
        client.close()

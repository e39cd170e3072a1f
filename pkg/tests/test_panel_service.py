import json
import threading
import urllib.error
import urllib.request

import pytest

from shia.clock import RealClock
from shia.logic import ALL_LOW, oracle_eval, vector
from shia.model_server import ModelServer
from shia.panel_service import PanelService
from shia.ws import WsClient


class PanelStack:
    """Model server + panel service on a pumped real clock."""

    def __init__(self, net, **panel_kwargs):
        self.clock = RealClock()
        self.model = ModelServer(net, self.clock, delay_ms=500)
        self.service = PanelService(
            self.model, self.clock, port=0, **panel_kwargs
        )
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


@pytest.fixture
def stack(reference_net):
    stack = PanelStack(reference_net)
    stack.host, stack.port = stack.start()
    yield stack
    stack.stop()


def connect(stack) -> WsClient:
    return WsClient(stack.host, stack.port)


def recv_state(client, timeout=5.0):
    while True:
        msg = json.loads(client.recv_text(timeout))
        if msg["type"] == "state":
            return msg


def test_initial_state_pushed_on_connect(stack, reference_net):
    client = connect(stack)
    try:
        msg = recv_state(client)
        assert msg["mode"] == "MOM"
        assert msg["inputs"] == [0, 0, 0, 0, 0]
        assert msg["outputs"] == [int(b) for b in oracle_eval(reference_net, ALL_LOW)]
        assert "internals" in msg
    finally:
        client.close()


def test_set_pin_broadcasts_new_state(stack, reference_net):
    client = connect(stack)
    try:
        first = recv_state(client)
        client.send_text(json.dumps({"type": "set_pin", "pin": 1, "level": 1}))
        msg = recv_state(client)
        assert msg["seq"] > first["seq"]
        assert msg["inputs"][0] == 1
        expected = oracle_eval(reference_net, vector(1, 0, 0, 0, 0))
        assert msg["outputs"] == [int(b) for b in expected]
    finally:
        client.close()


def test_commands_applied_in_send_order(stack):
    client = connect(stack)
    try:
        recv_state(client)
        for level in (1, 0, 1):
            client.send_text(json.dumps({"type": "set_pin", "pin": 2, "level": level}))
        states = [recv_state(client) for _ in range(3)]
        assert [s["inputs"][1] for s in states] == [1, 0, 1]
        seqs = [s["seq"] for s in states]
        assert seqs == sorted(seqs)
    finally:
        client.close()


def test_malformed_command_error_reply_only(stack):
    noisy = connect(stack)
    quiet = connect(stack)
    try:
        recv_state(noisy)
        recv_state(quiet)
        noisy.send_text("not json")
        reply = json.loads(noisy.recv_text())
        assert reply["type"] == "error"
        noisy.send_text(json.dumps({"type": "set_pin", "pin": 9, "level": 1}))
        reply = json.loads(noisy.recv_text())
        assert reply["type"] == "error"
        # The quiet client saw no broadcast from either bad command.
        with pytest.raises(TimeoutError):
            quiet.recv_text(timeout=0.4)
    finally:
        noisy.close()
        quiet.close()


def test_set_mode_without_board_reports_error(stack):
    client = connect(stack)
    try:
        recv_state(client)
        client.send_text(json.dumps({"type": "set_mode", "mode": "MRM"}))
        reply = json.loads(client.recv_text())
        assert reply["type"] == "error"
        assert "transport" in reply["detail"]
    finally:
        client.close()


def test_request_snapshot(stack):
    client = connect(stack)
    try:
        recv_state(client)
        client.send_text(json.dumps({"type": "request_snapshot"}))
        msg = recv_state(client)
        assert msg["mode"] == "MOM"
    finally:
        client.close()


def test_broadcast_fans_out_to_all_clients(stack):
    a = connect(stack)
    b = connect(stack)
    try:
        recv_state(a)
        recv_state(b)
        a.send_text(json.dumps({"type": "set_pin", "pin": 3, "level": 1}))
        for client in (a, b):
            msg = recv_state(client)
            assert msg["inputs"][2] == 1
    finally:
        a.close()
        b.close()


def test_fallback_page_served_without_assets(reference_net):
    stack = PanelStack(reference_net, assets_dir=None)
    host, port = stack.start()
    try:
        if stack.service.assets_dir is None:
            with urllib.request.urlopen(f"http://{host}:{port}/") as resp:
                body = resp.read().decode()
            assert "panel" in body.lower()
        else:  # a built frontend is present in the repo; it is served instead
            with urllib.request.urlopen(f"http://{host}:{port}/index.html") as resp:
                assert resp.status == 200
    finally:
        stack.stop()


def test_unknown_path_is_404(stack):
    request = urllib.request.Request(f"http://{stack.host}:{stack.port}/missing.js")
    with pytest.raises(urllib.error.HTTPError) as err:
        urllib.request.urlopen(request)
    assert err.value.code == 404


def test_run_sweep_walks_the_live_server(reference_net, tmp_path):
    out_dir = tmp_path / "sweep"
    stack = PanelStack(reference_net, sweep_out=out_dir, mom_step_ms=5)
    host, port = stack.start()
    client = WsClient(host, port)
    try:
        recv_state(client)
        client.send_text(json.dumps({"type": "run_sweep", "mode": "MOM"}))
        deadline_states = 0
        saw_complete = False
        while deadline_states < 400 and not saw_complete:
            msg = recv_state(client, timeout=10.0)
            deadline_states += 1
            saw_complete = any("sweep MOM complete" in line for line in msg.get("log", []))
        assert saw_complete
        assert (out_dir / "truth_table_mom.csv").is_file()
        # A second sweep request while one runs is refused with an error.
        client.send_text(json.dumps({"type": "run_sweep"}))
        client.send_text(json.dumps({"type": "run_sweep"}))
        got_error = False
        for _ in range(10):
            raw = json.loads(client.recv_text(timeout=5.0))
            if raw["type"] == "error" and "already running" in raw["detail"]:
                got_error = True
                break
        assert got_error
    finally:
        client.close()
        stack.stop()

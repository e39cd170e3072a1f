import pytest

from shia.board_server import BoardServer
from shia.clock import VirtualClock
from shia.logic import ALL_LOW, Level, oracle_eval, settle
from shia.model_server import (
    STATUS_IDLE,
    STATUS_OK,
    STATUS_REPLY_TIMEOUT,
    STATUS_SESSION_FAULT,
    EventKind,
    HarnessEvent,
    Mode,
    ModelServer,
    SessionError,
    pin_high,
    pin_low,
    set_mode,
)
from shia.transport import Transcript, open_loopback

L, H = Level.LOW, Level.HIGH


@pytest.fixture
def clock():
    return VirtualClock()


@pytest.fixture
def server(reference_net, clock):
    server = ModelServer(reference_net, clock)
    server.start()
    return server


def mrm_server(reference_net, clock, **kwargs):
    """Server in MRM wired to a bare loopback peer (no board behind it)."""
    transcript = Transcript()
    model_ep, far_ep = open_loopback(clock, transcript=transcript, sides=("model", "board"))
    server = ModelServer(reference_net, clock, **kwargs)
    server.attach(model_ep)
    server.start()
    server.post_event(set_mode(Mode.MRM))
    return server, far_ep, transcript


def test_fresh_start_snapshot(reference_net, clock):
    server = ModelServer(reference_net, clock)
    snap = server.snapshot()
    assert snap.mode is Mode.MOM
    assert snap.inputs == ALL_LOW and snap.outputs == ALL_LOW
    assert snap.status == STATUS_IDLE
    assert snap.listen_state == "idle"


def test_post_before_start_rejected(reference_net, clock):
    server = ModelServer(reference_net, clock)
    with pytest.raises(SessionError):
        server.post_event(pin_high(1))


def test_started_outputs_follow_power_on(server, reference_net):
    assert server.snapshot().outputs == oracle_eval(reference_net, ALL_LOW)
    assert server.snapshot().status == STATUS_OK


def test_mom_pin_event_updates_via_model(server, reference_net):
    server.post_event(pin_high(1))
    snap = server.snapshot()
    expected_inputs = (H, L, L, L, L)
    assert snap.inputs == expected_inputs
    assert snap.outputs == oracle_eval(reference_net, expected_inputs)
    assert snap.internals is not None
    assert snap.internals == settle(reference_net, expected_inputs)[1]


def test_mom_writes_no_bytes(reference_net, clock):
    transcript = Transcript()
    model_ep, _ = open_loopback(clock, transcript=transcript, sides=("model", "board"))
    server = ModelServer(reference_net, clock)
    server.attach(model_ep)
    server.start()
    for pin in range(1, 6):
        server.post_event(pin_high(pin))
        server.post_event(pin_low(pin))
    assert transcript.entries == []


def test_mrm_pin_event_transmits_and_leaves_outputs(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock)
    far_ep.read()  # drain the resynchronisation commands
    outputs_before = server.snapshot().outputs
    server.post_event(pin_high(2))
    assert far_ep.read() == b"21"
    snap = server.snapshot()
    assert snap.inputs[1] is H
    assert snap.outputs == outputs_before  # no local stimulation in MRM
    assert snap.internals is None


def test_mrm_redundant_event_still_transmits(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock)
    far_ep.read()
    server.post_event(pin_high(3))
    server.post_event(pin_high(3))
    assert far_ep.read() == b"3131"


def test_mode_switch_resynchronises_all_pins(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock)
    assert far_ep.read() == b"1020304050"


def test_resync_carries_current_attributes(reference_net, clock):
    transcript = Transcript()
    model_ep, far_ep = open_loopback(clock, transcript=transcript, sides=("model", "board"))
    server = ModelServer(reference_net, clock)
    server.attach(model_ep)
    server.start()
    server.post_event(pin_high(2))
    server.post_event(pin_high(5))
    server.post_event(set_mode(Mode.MRM))
    assert far_ep.read() == b"1021304051"


def test_one_frame_per_event(reference_net, clock):
    server, far_ep, transcript = mrm_server(reference_net, clock)
    far_ep.read()
    sent_before = len([e for e in transcript.entries if e.side == "model" and e.direction == "tx"])
    events = [pin_high(1), pin_high(4), pin_low(1), pin_high(1)]
    for ev in events:
        server.post_event(ev)
    sent = [e for e in transcript.entries if e.side == "model" and e.direction == "tx"]
    assert len(sent) - sent_before == len(events)


def test_receive_updates_after_delay(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock, delay_ms=500)
    far_ep.read()
    server.post_event(pin_high(2))
    far_ep.read()
    far_ep.write(b"31")
    far_ep.write(b"40")
    clock.advance(499)
    assert server.snapshot().outputs[2] is L  # not read yet
    clock.advance(1)
    snap = server.snapshot()
    assert snap.outputs[2] is H and snap.outputs[3] is L
    assert snap.rx_state == "idle"


def test_malformed_reply_skipped_region_continues(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock)
    far_ep.read()
    server.post_event(pin_high(1))
    far_ep.read()
    far_ep.write(b"xx31")
    clock.advance(500)
    snap = server.snapshot()
    assert snap.outputs[2] is H
    assert snap.status == STATUS_OK


def test_reply_timeout_surfaced(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock, delay_ms=500)
    far_ep.read()
    server.post_event(pin_high(1))
    far_ep.read()  # board never answers
    clock.advance(500 + 1000 - 1)
    assert server.timeout_count == 0
    clock.advance(1)
    assert server.timeout_count == 1
    assert server.status == STATUS_REPLY_TIMEOUT
    # The session stays alive: a later reply cycle recovers.
    server.post_event(pin_low(1))
    far_ep.write(b"31")
    clock.advance(500)
    assert server.status == STATUS_OK
    assert server.snapshot().outputs[2] is H


def test_new_command_supersedes_pending_read(reference_net, clock):
    # Pin events 400 ms apart: the read happens 500 ms after the latest
    # transmission and drains both replies; no spurious timeout fires.
    server, far_ep, _ = mrm_server(reference_net, clock)
    far_ep.read()
    server.post_event(pin_high(1))
    clock.advance(400)
    server.post_event(pin_high(2))
    far_ep.read()
    far_ep.write(b"31")  # out3 is low at power-on, so this flips a lamp
    clock.advance(100)
    assert server.snapshot().outputs[2] is L  # earlier cycle was superseded
    clock.advance(400)
    assert server.snapshot().outputs[2] is H
    assert server.timeout_count == 0


def test_transport_close_faults_session(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock)
    far_ep.read()
    far_ep.close()
    server.post_event(pin_high(1))
    snap = server.snapshot()
    assert snap.status == STATUS_SESSION_FAULT
    assert snap.tx_state == "initialise"


def test_mrm_requires_endpoint(reference_net, clock):
    server = ModelServer(reference_net, clock)
    server.start()
    with pytest.raises(SessionError):
        server.post_event(set_mode(Mode.MRM))


def test_switch_back_to_mom_resyncs_local_model(reference_net, clock):
    server, far_ep, _ = mrm_server(reference_net, clock)
    far_ep.read()
    server.post_event(pin_high(1))
    server.post_event(pin_high(3))
    server.post_event(set_mode(Mode.MOM))
    snap = server.snapshot()
    expected = (H, L, H, L, L)
    assert snap.mode is Mode.MOM
    assert snap.inputs == expected
    assert snap.outputs == oracle_eval(reference_net, expected)
    assert snap.internals is not None


def test_full_round_trip_against_board(reference_net, clock):
    transcript = Transcript()
    model_ep, board_ep = open_loopback(clock, transcript=transcript, sides=("model", "board"))
    board = BoardServer(reference_net, clock)
    board.serve(board_ep, poll_hz=10)
    server = ModelServer(reference_net, clock, delay_ms=500)
    server.attach(model_ep)
    server.start()
    server.post_event(set_mode(Mode.MRM))
    clock.advance(700)
    for pin, level in [(1, H), (2, H), (5, H), (2, L)]:
        server.post_event(pin_high(pin) if level else pin_low(pin))
        clock.advance(700)
        expected = oracle_eval(reference_net, server.snapshot().inputs)
        assert server.snapshot().outputs == expected
    assert server.timeout_count == 0


def test_event_validation():
    with pytest.raises(ValueError):
        pin_high(0)
    with pytest.raises(ValueError):
        pin_low(6)
    with pytest.raises(ValueError):
        HarnessEvent(EventKind.SET_MODE)


def test_listener_notified_once_per_change(server):
    seen = []
    server.add_listener(lambda snap: seen.append(snap))
    server.post_event(pin_high(1))
    assert len(seen) == 1
    server.post_event(pin_high(1))  # no state change in MOM: same snapshot
    assert len(seen) == 1
    server.post_event(pin_low(1))
    assert len(seen) == 2

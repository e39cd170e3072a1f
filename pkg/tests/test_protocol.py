import pytest
from hypothesis import given
from hypothesis import strategies as st

from shia.logic import Level
from shia.protocol import (
    DEFAULT_SERIAL,
    FRAME_SIZE,
    FrameStream,
    InvalidLevelError,
    InvalidPinError,
    MalformedFrameError,
    ProtocolError,
    SerialConfig,
    TruncatedFrameError,
    decode_pin_message,
    encode_pin_message,
)

L, H = Level.LOW, Level.HIGH


def test_encode_wire_examples():
    assert encode_pin_message(1, H) == b"11"
    assert encode_pin_message(1, L) == b"10"
    assert encode_pin_message(2, H) == b"21"


def test_encode_rejects_out_of_range_pin():
    with pytest.raises(InvalidPinError):
        encode_pin_message(0, H)
    with pytest.raises(InvalidPinError):
        encode_pin_message(6, H)


def test_decode_examples():
    assert decode_pin_message(b"51") == (5, H)
    with pytest.raises(InvalidPinError):
        decode_pin_message(b"60")
    with pytest.raises(MalformedFrameError):
        decode_pin_message(b"1x")
    with pytest.raises(InvalidLevelError):
        decode_pin_message(b"19")
    with pytest.raises(InvalidPinError):
        decode_pin_message(b"01")
    with pytest.raises(MalformedFrameError):
        decode_pin_message(b"1")
    with pytest.raises(MalformedFrameError):
        decode_pin_message(b"110")


def test_round_trip_all_ten_messages():
    seen = set()
    for pin in range(1, 6):
        for level in (L, H):
            frame = encode_pin_message(pin, level)
            assert len(frame) == FRAME_SIZE
            assert decode_pin_message(frame) == (pin, level)
            seen.add(frame)
    assert len(seen) == 10


@given(st.binary(min_size=2, max_size=2))
def test_decode_never_aborts(frame):
    try:
        pin, level = decode_pin_message(frame)
    except ProtocolError:
        pass
    else:
        assert 1 <= pin <= 5 and level in (L, H)


def test_frame_stream_splits_fixed_length():
    fs = FrameStream()
    assert fs.push(b"1121") == [b"11", b"21"]


def test_frame_stream_reassembles_partial():
    fs = FrameStream()
    assert fs.push(b"1") == []
    assert fs.pending == b"1"
    assert fs.push(b"0") == [b"10"]
    assert fs.pending == b""
    fs.finish()


def test_frame_stream_truncation():
    fs = FrameStream()
    fs.push(b"112")
    with pytest.raises(TruncatedFrameError):
        fs.finish()


@given(st.lists(st.sampled_from([b"11", b"10", b"21", b"30", b"41", b"50"])), st.data())
def test_frame_stream_chunking_invariance(frames, data):
    stream = b"".join(frames)
    fs = FrameStream()
    out = []
    i = 0
    while i < len(stream):
        step = data.draw(st.integers(min_value=1, max_value=4))
        out.extend(fs.push(stream[i : i + step]))
        i += step
    assert out == frames
    fs.finish()


def test_serial_config_defaults():
    assert DEFAULT_SERIAL == SerialConfig(byte_size=8, stop_bits=1, parity="none", nominal_baud=9600)

"""Two-character pin message codec and fixed-length stream framing.

Every message on the wire is exactly two ASCII bytes: a pin digit '1'..'5'
followed by a level digit '0' or '1'. "11" drives pin 1 high, "10" drives
it low, "21" drives pin 2 high. There are no delimiters, checksums, or
acknowledgement frames. The same format carries commands (model to board,
input pins) and responses (board to model, output pins); direction is
known only from which way the bytes flow.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .logic.signals import N_PINS, Level

FRAME_SIZE = 2


class ProtocolError(Exception):
    pass


class InvalidPinError(ProtocolError):
    """Pin digit outside 1..5."""


class InvalidLevelError(ProtocolError):
    """Level digit outside 0..1."""


class MalformedFrameError(ProtocolError):
    """Frame is not two ASCII digits."""


class TruncatedFrameError(ProtocolError):
    """Stream ended in the middle of a frame."""


@dataclass(frozen=True)
class SerialConfig:
    """Serial line parameters; both ends of a session must hold equal values.

    On emulated transports these are inert apart from the equality check,
    but they are carried so a session against real serial hardware would
    configure the port identically on both sides.
    """

    byte_size: int = 8
    stop_bits: int = 1
    parity: str = "none"  # none | even | odd
    nominal_baud: int = 9600


DEFAULT_SERIAL = SerialConfig()


class Direction(enum.Enum):
    """Context metadata, never on the wire: commands address input pins,
    responses report output pins."""

    COMMAND = "command"
    RESPONSE = "response"


@dataclass(frozen=True)
class PinMessage:
    pin: int
    level: Level
    direction: Direction

    @property
    def frame(self) -> bytes:
        return encode_pin_message(self.pin, self.level)


def encode_pin_message(pin: int, level: Level) -> bytes:
    """Encode a pin/level pair as its two-byte frame, e.g. (1, HIGH) -> b"11"."""
    if not 1 <= pin <= N_PINS:
        raise InvalidPinError(f"pin must be 1..{N_PINS}, got {pin}")
    return b"%d%d" % (pin, int(level))


def decode_pin_message(frame: bytes) -> tuple[int, Level]:
    """Decode a two-byte frame back to (pin, level). Inverse of encode."""
    if len(frame) != FRAME_SIZE:
        raise MalformedFrameError(f"frame must be {FRAME_SIZE} bytes, got {len(frame)}")
    pin_byte, level_byte = frame[0], frame[1]
    if not (0x30 <= pin_byte <= 0x39 and 0x30 <= level_byte <= 0x39):
        raise MalformedFrameError(f"frame {frame!r} is not two ASCII digits")
    pin = pin_byte - 0x30
    if not 1 <= pin <= N_PINS:
        raise InvalidPinError(f"pin digit out of range in frame {frame!r}")
    level = level_byte - 0x30
    if level not in (0, 1):
        raise InvalidLevelError(f"level digit out of range in frame {frame!r}")
    return pin, Level(level)


class FrameStream:
    """Reassembles a byte stream into consecutive two-byte frames.

    A trailing odd byte is held until its partner arrives. Owned by exactly
    one reader.
    """

    def __init__(self) -> None:
        self._buf = bytearray()

    def push(self, data: bytes) -> list[bytes]:
        """Absorb a chunk and return every complete frame now available."""
        self._buf.extend(data)
        frames = []
        while len(self._buf) >= FRAME_SIZE:
            frames.append(bytes(self._buf[:FRAME_SIZE]))
            del self._buf[:FRAME_SIZE]
        return frames

    @property
    def pending(self) -> bytes:
        return bytes(self._buf)

    def finish(self) -> None:
        """Signal end of stream; raises if a partial frame is held."""
        if self._buf:
            raise TruncatedFrameError(
                f"stream closed mid-frame with {len(self._buf)} byte(s) pending"
            )

"""Byte-stream transports connecting the two servers.

Endpoints are duplex, ordered, unduplicated byte streams with non-blocking
reads; both servers poll or schedule their reads, so nothing ever blocks
on a transport. Two implementations are provided: an in-process loopback
with injectable one-way latency (driven by the shared clock) and a TCP
stream. A transcript can be attached to record every byte with its
timestamp for timing and determinism checks.

Adapting a real serial port means implementing the same small endpoint
surface (write / read / close); no such adapter ships here.
"""

from __future__ import annotations

import socket
from collections import deque
from dataclasses import dataclass, field

from .clock import Clock
from .protocol import DEFAULT_SERIAL, SerialConfig


class TransportError(Exception):
    pass


class StreamClosedError(TransportError):
    """The stream is closed (locally or by the peer)."""


@dataclass(frozen=True)
class TranscriptEntry:
    t_ms: int
    side: str
    direction: str  # "tx" | "rx"
    data: bytes

    def line(self) -> str:
        return f"{self.t_ms} {self.side} {self.direction} {self.data.decode('ascii', 'backslashreplace')}"


@dataclass
class Transcript:
    """Ordered record of every transfer, shared by both endpoints."""

    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, t_ms: int, side: str, direction: str, data: bytes) -> None:
        self.entries.append(TranscriptEntry(t_ms, side, direction, data))

    def lines(self) -> list[str]:
        return [e.line() for e in self.entries]

    def blob(self) -> bytes:
        """Canonical serialization, for byte-identical comparisons."""
        return "\n".join(self.lines()).encode("utf-8")


class LoopbackEndpoint:
    """One side of an in-process duplex pair."""

    def __init__(
        self,
        clock: Clock,
        config: SerialConfig,
        latency_ms: int,
        side: str,
        transcript: Transcript | None,
    ):
        self._clock = clock
        self.config = config
        self.latency_ms = latency_ms
        self.side = side
        self._transcript = transcript
        self._inbox: deque[tuple[int, bytes]] = deque()  # (ready_at_ms, data)
        self._closed = False
        self.peer: "LoopbackEndpoint" = self  # set by open_loopback

    @property
    def closed(self) -> bool:
        return self._closed

    def write(self, data: bytes) -> None:
        if self._closed:
            raise StreamClosedError(f"{self.side}: endpoint is closed")
        if self.peer._closed:
            raise StreamClosedError(f"{self.side}: peer endpoint is closed")
        if not data:
            return
        if self._transcript is not None:
            self._transcript.record(self._clock.now(), self.side, "tx", bytes(data))
        self.peer._inbox.append((self._clock.now() + self.latency_ms, bytes(data)))

    def read(self) -> bytes:
        """Drain every chunk already delivered; b"" if none and stream alive."""
        if self._closed:
            raise StreamClosedError(f"{self.side}: endpoint is closed")
        now = self._clock.now()
        chunks = []
        while self._inbox and self._inbox[0][0] <= now:
            chunks.append(self._inbox.popleft()[1])
        data = b"".join(chunks)
        if data:
            if self._transcript is not None:
                self._transcript.record(now, self.side, "rx", data)
            return data
        if self.peer._closed and not self._inbox:
            raise StreamClosedError(f"{self.side}: peer endpoint is closed")
        return b""

    def close(self) -> None:
        self._closed = True


def open_loopback(
    clock: Clock,
    config: SerialConfig = DEFAULT_SERIAL,
    latency_ms: int = 0,
    transcript: Transcript | None = None,
    sides: tuple[str, str] = ("a", "b"),
) -> tuple[LoopbackEndpoint, LoopbackEndpoint]:
    """Cross-connected endpoint pair; bytes written on one side become
    readable on the other after ``latency_ms`` of clock time, in both
    directions independently. Both sides share one SerialConfig by
    construction, which is the loopback form of the config handshake."""
    if latency_ms < 0:
        raise ValueError("latency must be >= 0")
    a = LoopbackEndpoint(clock, config, latency_ms, sides[0], transcript)
    b = LoopbackEndpoint(clock, config, latency_ms, sides[1], transcript)
    a.peer, b.peer = b, a
    return a, b


def parse_address(address: str) -> tuple[str, int]:
    """Parse 'host:port'; an empty host means the local interface."""
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"bad address {address!r}: expected 'host:port'")
    return host or "127.0.0.1", int(port)


class StreamEndpoint:
    """TCP-backed endpoint with non-blocking reads."""

    def __init__(
        self,
        sock: socket.socket,
        config: SerialConfig,
        clock: Clock | None = None,
        side: str = "stream",
        transcript: Transcript | None = None,
    ):
        self._sock = sock
        self._sock.setblocking(False)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.config = config
        self._clock = clock
        self.side = side
        self._transcript = transcript
        self._closed = False
        self._peer_closed = False

    @property
    def closed(self) -> bool:
        return self._closed

    def _now(self) -> int:
        return self._clock.now() if self._clock is not None else 0

    def write(self, data: bytes) -> None:
        if self._closed:
            raise StreamClosedError(f"{self.side}: endpoint is closed")
        if self._transcript is not None and data:
            self._transcript.record(self._now(), self.side, "tx", bytes(data))
        view = memoryview(data)
        while view:
            try:
                sent = self._sock.send(view)
            except BlockingIOError:
                # Tiny frames in practice; wait for the buffer to drain.
                self._sock.setblocking(True)
                try:
                    sent = self._sock.send(view)
                finally:
                    self._sock.setblocking(False)
            except (BrokenPipeError, ConnectionResetError) as exc:
                raise StreamClosedError(f"{self.side}: peer endpoint is closed") from exc
            view = view[sent:]

    def read(self) -> bytes:
        if self._closed:
            raise StreamClosedError(f"{self.side}: endpoint is closed")
        chunks = []
        while True:
            try:
                chunk = self._sock.recv(4096)
            except BlockingIOError:
                break
            except ConnectionResetError:
                self._peer_closed = True
                break
            if chunk == b"":
                self._peer_closed = True
                break
            chunks.append(chunk)
        data = b"".join(chunks)
        if data:
            if self._transcript is not None:
                self._transcript.record(self._now(), self.side, "rx", data)
            return data
        if self._peer_closed:
            raise StreamClosedError(f"{self.side}: peer endpoint is closed")
        return b""

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()


class StreamListener:
    def __init__(self, address: str, config: SerialConfig = DEFAULT_SERIAL):
        host, port = parse_address(address)
        self.config = config
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(4)

    @property
    def address(self) -> str:
        host, port = self._sock.getsockname()[:2]
        return f"{host}:{port}"

    def accept(
        self,
        timeout: float | None = None,
        clock: Clock | None = None,
        side: str = "board",
        transcript: Transcript | None = None,
    ) -> StreamEndpoint:
        self._sock.settimeout(timeout)
        conn, _ = self._sock.accept()
        return StreamEndpoint(conn, self.config, clock, side, transcript)

    def close(self) -> None:
        self._sock.close()


def listen_stream(address: str, config: SerialConfig = DEFAULT_SERIAL) -> StreamListener:
    """Bind a listener; ``accept`` yields connected endpoints."""
    return StreamListener(address, config)


def connect_stream(
    address: str,
    config: SerialConfig = DEFAULT_SERIAL,
    clock: Clock | None = None,
    side: str = "model",
    transcript: Transcript | None = None,
) -> StreamEndpoint:
    """Connect to a listening board; raises ConnectionRefusedError if dead."""
    host, port = parse_address(address)
    sock = socket.create_connection((host, port), timeout=5.0)
    return StreamEndpoint(sock, config, clock, side, transcript)

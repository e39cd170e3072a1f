"""Minimal WebSocket (RFC 6455) framing: handshake helpers, frame codec,
and a small blocking client used by tests and scripts.

Only what the panel channel needs: single-fragment text frames, close,
and ping/pong. Client-to-server frames are masked as the RFC requires;
server-to-client frames are not.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WsError(ConnectionError):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_frame(payload: bytes, opcode: int = OP_TEXT, mask: bool = False) -> bytes:
    head = bytearray([0x80 | opcode])
    mask_bit = 0x80 if mask else 0
    n = len(payload)
    if n < 126:
        head.append(mask_bit | n)
    elif n < 2**16:
        head.append(mask_bit | 126)
        head += struct.pack(">H", n)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        head += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return bytes(head) + payload


def read_frame(read_exact) -> tuple[int, bytes]:
    """Read one frame via ``read_exact(n) -> bytes``; returns (opcode, payload)."""
    b0, b1 = read_exact(2)
    opcode = b0 & 0x0F
    if not b0 & 0x80:
        raise WsError("fragmented frames are not supported")
    masked = bool(b1 & 0x80)
    n = b1 & 0x7F
    if n == 126:
        (n,) = struct.unpack(">H", read_exact(2))
    elif n == 127:
        (n,) = struct.unpack(">Q", read_exact(8))
    key = read_exact(4) if masked else None
    payload = read_exact(n) if n else b""
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return opcode, payload


def sock_read_exact(sock: socket.socket):
    def read_exact(n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = sock.recv(n - len(buf))
            if not chunk:
                raise WsError("socket closed mid-frame")
            buf.extend(chunk)
        return bytes(buf)

    return read_exact


def buffered_read_exact(fileobj):
    """read_exact over a buffered file object (e.g. a handler's rfile), so
    bytes the HTTP layer already buffered are not lost."""

    def read_exact(n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = fileobj.read(n - len(buf))
            if not chunk:
                raise WsError("socket closed mid-frame")
            buf.extend(chunk)
        return bytes(buf)

    return read_exact


class WsClient:
    """Blocking text-message client for the panel channel."""

    def __init__(self, host: str, port: int, path: str = "/ws", timeout: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._read_exact = sock_read_exact(self._sock)
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        request = (
            f"GET {path} HTTP/1.1\r\n"
            f"Host: {host}:{port}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n"
            "\r\n"
        )
        self._sock.sendall(request.encode("ascii"))
        status = self._read_headers()
        if "101" not in status:
            raise WsError(f"handshake refused: {status}")

    def _read_headers(self) -> str:
        data = bytearray()
        while not data.endswith(b"\r\n\r\n"):
            chunk = self._sock.recv(1)
            if not chunk:
                raise WsError("connection closed during handshake")
            data.extend(chunk)
        return data.split(b"\r\n", 1)[0].decode("latin-1")

    def send_text(self, text: str) -> None:
        self._sock.sendall(encode_frame(text.encode("utf-8"), OP_TEXT, mask=True))

    def recv_text(self, timeout: float | None = None) -> str:
        """Next text message; replies to pings transparently."""
        if timeout is not None:
            self._sock.settimeout(timeout)
        while True:
            opcode, payload = read_frame(self._read_exact)
            if opcode == OP_TEXT:
                return payload.decode("utf-8")
            if opcode == OP_PING:
                self._sock.sendall(encode_frame(payload, OP_PONG, mask=True))
            elif opcode == OP_CLOSE:
                raise WsError("server closed the channel")

    def close(self) -> None:
        try:
            self._sock.sendall(encode_frame(b"", OP_CLOSE, mask=True))
        except OSError:
            pass
        self._sock.close()

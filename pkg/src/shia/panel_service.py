"""Operator panel service.

A local HTTP listener that serves the panel's static assets and upgrades
``/ws`` to a WebSocket message channel. Clients send pin-toggle and
mode-switch commands; the service translates them into harness events on
the clock thread and pushes a state broadcast to every client whenever the
model server's snapshot changes, so lamps follow the model rather than
being predicted client-side.

Wire schema (JSON, one object per text message):

* client -> server: ``{"type": "set_pin", "pin": 1..5, "level": 0|1}``,
  ``{"type": "set_mode", "mode": "MOM"|"MRM"}``,
  ``{"type": "run_sweep", "mode"?: "MOM"|"MRM"}``,
  ``{"type": "request_snapshot"}``
* server -> client: ``{"type": "state", "seq", "mode", "inputs", "outputs",
  "internals"?, "status", "log"}`` and ``{"type": "error", "detail"}``
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import threading
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import ws
from .clock import Clock
from .harness import TruthTable, emit_report
from .logic.signals import Level, all_vectors
from .model_server import Mode, ModelServer, SessionError, Snapshot, pin_event, set_mode

logger = logging.getLogger(__name__)

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8743

FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>chassis panel</title></head>
<body><h1>chassis panel</h1>
<p>No panel assets are built. Build the frontend (see README) or point
--assets at a build directory. The WebSocket API at <code>/ws</code> is
live regardless.</p></body></html>
"""


def default_assets_dir() -> Path | None:
    """Panel asset directory: $SHIA_PANEL_ASSETS, else frontend/dist near the repo."""
    env = os.environ.get("SHIA_PANEL_ASSETS")
    if env:
        path = Path(env)
        return path if path.is_dir() else None
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "frontend" / "dist"
        if (candidate / "index.html").is_file():
            return candidate
    return None


class _Peer:
    """One connected panel client."""

    def __init__(self, sock):
        self.sock = sock
        self._lock = threading.Lock()
        self.alive = True

    def send_json(self, payload: dict) -> bool:
        data = ws.encode_frame(json.dumps(payload).encode("utf-8"))
        with self._lock:
            if not self.alive:
                return False
            try:
                self.sock.sendall(data)
                return True
            except OSError:
                self.alive = False
                return False


class PanelService:
    def __init__(
        self,
        model: ModelServer,
        clock: Clock,
        *,
        host: str = DEFAULT_HOST,
        port: int = DEFAULT_PORT,
        assets_dir=None,
        sweep_out=None,
        mom_step_ms: int = 100,
    ):
        self.model = model
        self.clock = clock
        self.host = host
        self.port = port
        self.assets_dir = Path(assets_dir) if assets_dir else default_assets_dir()
        self.sweep_out = sweep_out
        self.mom_step_ms = mom_step_ms

        self._peers: list[_Peer] = []
        self._peers_lock = threading.Lock()
        self._seq = 0
        self._seq_lock = threading.Lock()
        self._log_tail: deque[str] = deque(maxlen=50)
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self._sweep_running = False

        model.add_listener(self._on_model_change)

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> tuple[str, int]:
        """Bind and serve in a daemon thread; returns the bound address."""
        service = self

        class Handler(_PanelHandler):
            panel = service

        self._httpd = ThreadingHTTPServer((self.host, self.port), Handler)
        self._httpd.daemon_threads = True
        self.host, self.port = self._httpd.server_address[:2]
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="panel-http", daemon=True
        )
        self._thread.start()
        logger.info("panel listening on http://%s:%d/", self.host, self.port)
        return self.host, self.port

    def stop(self) -> None:
        with self._peers_lock:
            peers, self._peers = self._peers, []
        for peer in peers:
            peer.alive = False
            try:
                peer.sock.close()
            except OSError:
                pass
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}/"

    # -- broadcasting ---------------------------------------------------------

    def _state_payload(self, snap: Snapshot, seq: int) -> dict:
        payload = {
            "type": "state",
            "seq": seq,
            "mode": snap.mode.value,
            "inputs": [int(b) for b in snap.inputs],
            "outputs": [int(b) for b in snap.outputs],
            "status": snap.status,
            "log": list(self._log_tail)[-10:],
        }
        if snap.internals is not None:
            payload["internals"] = {k: int(v) for k, v in sorted(snap.internals.items())}
        return payload

    def _next_seq(self) -> int:
        with self._seq_lock:
            self._seq += 1
            return self._seq

    def _on_model_change(self, snap: Snapshot) -> None:
        self._broadcast(snap)

    def _broadcast(self, snap: Snapshot | None = None) -> None:
        snap = snap or self.model.snapshot()
        payload = self._state_payload(snap, self._next_seq())
        with self._peers_lock:
            peers = list(self._peers)
        for peer in peers:
            if not peer.send_json(payload):
                self._drop(peer)

    def _drop(self, peer: _Peer) -> None:
        with self._peers_lock:
            if peer in self._peers:
                self._peers.remove(peer)

    def _log(self, line: str) -> None:
        self._log_tail.append(line)
        logger.info("panel: %s", line)

    # -- command handling (reader threads -> clock thread) ---------------------

    def handle_client_message(self, peer: _Peer, text: str) -> None:
        try:
            doc = json.loads(text)
            if not isinstance(doc, dict):
                raise ValueError("message must be a JSON object")
            mtype = doc.get("type")
            if mtype == "set_pin":
                pin, level = int(doc["pin"]), int(doc["level"])
                if level not in (0, 1):
                    raise ValueError(f"level must be 0 or 1, got {level}")
                event = pin_event(pin, Level(level))  # validates the pin
                self._log(f"set_pin {pin} -> {level}")
                self.clock.post(lambda: self._apply(peer, lambda: self.model.post_event(event)))
            elif mtype == "set_mode":
                mode = Mode(str(doc["mode"]))
                self._log(f"set_mode {mode.value}")
                self.clock.post(
                    lambda: self._apply(peer, lambda: self.model.post_event(set_mode(mode)))
                )
            elif mtype == "request_snapshot":
                peer.send_json(self._state_payload(self.model.snapshot(), self._seq))
            elif mtype == "run_sweep":
                mode = Mode(str(doc["mode"])) if doc.get("mode") else None
                self.clock.post(lambda: self._start_sweep(peer, mode))
            else:
                raise ValueError(f"unknown message type {mtype!r}")
        except (KeyError, TypeError, ValueError) as exc:
            peer.send_json({"type": "error", "detail": str(exc)})

    def _apply(self, peer: _Peer, action) -> None:
        try:
            action()
        except SessionError as exc:
            peer.send_json({"type": "error", "detail": str(exc)})

    # -- panel-driven sweeps ----------------------------------------------------

    def _sweep_step_ms(self, mode: Mode) -> int:
        if mode is Mode.MOM:
            return self.mom_step_ms
        return self.model.delay_ms + 250

    def _start_sweep(self, peer: _Peer, mode: Mode | None) -> None:
        """Walk the live server through all 32 vectors, paced so the operator
        can watch the lamps; emits a report at the end when configured."""
        if self._sweep_running:
            peer.send_json({"type": "error", "detail": "a sweep is already running"})
            return
        target = mode or self.model.mode
        try:
            if self.model.mode is not target:
                self.model.post_event(set_mode(target))
        except SessionError as exc:
            peer.send_json({"type": "error", "detail": str(exc)})
            return
        self._sweep_running = True
        vectors = all_vectors()
        interval = self._sweep_step_ms(target)
        rows: list = []
        self._log(f"sweep {target.value} started")
        self._broadcast()

        def step(i: int) -> None:
            if i == len(vectors):
                finish()
                return
            current = self.model.snapshot().inputs
            for pin in range(1, 6):
                if current[pin - 1] != vectors[i][pin - 1]:
                    self.model.post_event(pin_event(pin, vectors[i][pin - 1]))

            def record() -> None:
                rows.append((vectors[i], self.model.snapshot().outputs))
                step(i + 1)

            self.clock.call_later(interval, record)

        def finish() -> None:
            self._sweep_running = False
            table = TruthTable(
                target.value, self.model.net.name, self.clock.now(), tuple(rows)
            )
            note = f"sweep {target.value} complete"
            if self.sweep_out:
                emit_report(
                    self.sweep_out,
                    [table],
                    run_info={"source": "panel", "mode": target.value},
                )
                note += f", report written to {self.sweep_out}"
            self._log(note)
            self._broadcast()

        step(0)

    # -- websocket session ------------------------------------------------------

    def run_ws_session(self, sock, rfile=None) -> None:
        """Serve one upgraded connection until it closes (caller's thread)."""
        peer = _Peer(sock)
        with self._peers_lock:
            self._peers.append(peer)
        peer.send_json(self._state_payload(self.model.snapshot(), self._seq))
        read_exact = ws.buffered_read_exact(rfile) if rfile is not None else ws.sock_read_exact(sock)
        try:
            while True:
                opcode, payload = ws.read_frame(read_exact)
                if opcode == ws.OP_CLOSE:
                    break
                if opcode == ws.OP_PING:
                    with peer._lock:
                        sock.sendall(ws.encode_frame(payload, ws.OP_PONG))
                elif opcode == ws.OP_TEXT:
                    self.handle_client_message(peer, payload.decode("utf-8"))
        except (ws.WsError, OSError):
            pass
        finally:
            peer.alive = False
            self._drop(peer)


class _PanelHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    panel: PanelService  # bound by PanelService.start

    def log_message(self, fmt, *args):  # route through logging, not stderr
        logger.debug("http: " + fmt, *args)

    def do_GET(self):  # noqa: N802 (http.server API)
        path = self.path.split("?", 1)[0]
        if path == "/ws":
            self._upgrade_ws()
            return
        self._serve_static(path)

    def _upgrade_ws(self) -> None:
        key = self.headers.get("Sec-WebSocket-Key")
        upgrade = (self.headers.get("Upgrade") or "").lower()
        if upgrade != "websocket" or not key:
            self.send_error(400, "expected a WebSocket upgrade")
            return
        self.send_response(101, "Switching Protocols")
        self.send_header("Upgrade", "websocket")
        self.send_header("Connection", "Upgrade")
        self.send_header("Sec-WebSocket-Accept", ws.accept_key(key))
        self.end_headers()
        self.close_connection = True
        self.panel.run_ws_session(self.connection, self.rfile)

    def _serve_static(self, path: str) -> None:
        assets = self.panel.assets_dir
        if path in ("", "/"):
            path = "/index.html"
        if assets is None:
            if path == "/index.html":
                self._send_bytes(FALLBACK_PAGE.encode("utf-8"), "text/html; charset=utf-8")
            else:
                self.send_error(404)
            return
        target = (assets / path.lstrip("/")).resolve()
        if not str(target).startswith(str(assets.resolve())) or not target.is_file():
            self.send_error(404)
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._send_bytes(target.read_bytes(), ctype)

    def _send_bytes(self, body: bytes, ctype: str) -> None:
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

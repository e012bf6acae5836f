"""HTTP collection endpoint: validate incoming events and append them.

Routes:
    POST /log/window    one window event as JSON        -> 204
    POST /log/session   one session event as JSON       -> 204
    POST /log/browsing  one browsing event as JSON      -> 204
    POST /allocate/{user|window|session}                -> 200 {"id": n}
    GET  /healthz                                       -> 200

Log responses carry no body: 400 for malformed or invalid payloads, 409 when
the event family does not match the route, 500 on storage failure. Clients
are expected to ignore errors entirely (best-effort logging), so the status
codes exist for diagnostics, not for protocol negotiation.

The server never assigns event timestamps; client time is authoritative and
server receive time is stored separately for diagnostics only. There is no
authentication by default (the design is anonymous by construction); an
optional shared token can be required via the X-Collector-Token header.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import events as ev
from .store import MemoryStore, StorageError

ID_KINDS = ("user", "window", "session")

_ROUTE_FAMILY = {
    "/log/window": ev.FAMILY_WINDOW,
    "/log/session": ev.FAMILY_SESSION,
    "/log/browsing": ev.FAMILY_BROWSING,
}


class IdRegistry:
    """Persistent sets of issued/observed identifiers, one per kind.

    Registered ids are never removed. With a directory the sets survive
    restarts via one append-only file per kind; without one they are
    process-local.
    """

    def __init__(self, directory: "str | Path | None" = None):
        self._lock = threading.Lock()
        self._seen: dict[str, set[int]] = {kind: set() for kind in ID_KINDS}
        self._handles = {}
        if directory is not None:
            base = Path(directory)
            base.mkdir(parents=True, exist_ok=True)
            for kind in ID_KINDS:
                path = base / f"ids_{kind}.log"
                if path.exists():
                    with open(path) as fh:
                        self._seen[kind].update(int(line) for line in fh if line.strip())
                self._handles[kind] = open(path, "a")

    def _persist(self, kind: str, value: int) -> None:
        handle = self._handles.get(kind)
        if handle is not None:
            handle.write(f"{value}\n")
            handle.flush()

    def register(self, kind: str, value: int) -> None:
        with self._lock:
            if value not in self._seen[kind]:
                self._seen[kind].add(value)
                self._persist(kind, value)

    def contains(self, kind: str, value: int) -> bool:
        with self._lock:
            return value in self._seen[kind]

    def count(self, kind: str) -> int:
        with self._lock:
            return len(self._seen[kind])

    def allocate(self, kind: str) -> int:
        """Uniformly random nonzero u64 not yet registered; registers it atomically."""
        if kind not in ID_KINDS:
            raise ValueError(f"unknown id kind {kind!r}")
        with self._lock:
            while True:
                candidate = secrets.randbits(64)
                if candidate != 0 and candidate not in self._seen[kind]:
                    self._seen[kind].add(candidate)
                    self._persist(kind, candidate)
                    return candidate

    def close(self) -> None:
        for handle in self._handles.values():
            handle.close()
        self._handles = {}


class CollectorService:
    """Route handling, independent of any HTTP server plumbing."""

    def __init__(self, store: MemoryStore, registry: IdRegistry | None = None):
        self.store = store
        self.registry = registry or IdRegistry()
        self._append_lock = threading.Lock()

    def handle_post(self, route: str, body: bytes) -> int:
        """Process one POST; returns the HTTP status code."""
        family = _ROUTE_FAMILY.get(route)
        if family is None:
            return 404
        try:
            record = ev.decode(body)
        except ev.MalformedPayload:
            return 400
        if ev.family_of(record) != family:
            return 409
        if not ev.validate(record).ok:
            return 400
        try:
            with self._append_lock:
                self.store.append(record, recv_time=int(time.time() * 1000))
        except StorageError:
            return 500
        core = record.core
        self.registry.register("user", core.user_id)
        self.registry.register("window", core.window_id)
        self.registry.register("session", core.session_id)
        return 204

    def allocate_id(self, kind: str) -> int:
        return self.registry.allocate(kind)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: CollectorService = None  # type: ignore[assignment]
    token: str | None = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _reply(self, status: int, body: bytes = b"") -> None:
        self.send_response(status)
        self.send_header("Content-Length", str(len(body)))
        if body:
            self.send_header("Content-Type", "application/json")
        self.end_headers()
        if body:
            self.wfile.write(body)

    def _authorized(self) -> bool:
        if self.token is None:
            return True
        return self.headers.get("X-Collector-Token") == self.token

    def do_GET(self):
        if self.path == "/healthz":
            self._reply(200, b'{"status":"ok"}')
        else:
            self._reply(404)

    def do_POST(self):
        if not self._authorized():
            self._reply(401)
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        if self.path.startswith("/allocate/"):
            kind = self.path[len("/allocate/"):]
            if kind not in ID_KINDS:
                self._reply(404)
                return
            allocated = self.service.allocate_id(kind)
            self._reply(200, json.dumps({"id": allocated}).encode())
            return
        self._reply(self.service.handle_post(self.path, body))


class CollectorServer:
    """Threading HTTP server wrapper around a CollectorService."""

    def __init__(self, service: CollectorService, host: str = "127.0.0.1",
                 port: int = 0, token: str | None = None):
        handler = type("BoundHandler", (_Handler,), {"service": service, "token": token})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc_info):
        self.stop()

"""Threaded HTTP server for the fixture corpus, with a request log."""
from __future__ import annotations

import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from ..errors import FixtureError
from .manifest import CorpusManifest, load_manifest


class _Handler(BaseHTTPRequestHandler):
    server_version = "rellfixture/0.1"
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # silence stderr access log
        pass

    def _send(self, status: int, body: bytes = b"", media_type: Optional[str] = None, location: str = None):
        self.send_response(status)
        if media_type:
            self.send_header("Content-Type", media_type)
        if location:
            self.send_header("Location", location)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def do_GET(self):
        fixture: FixtureServer = self.server.fixture
        fixture.record(self.command, self.path)
        route = fixture.route(self.path)
        if route[0] == "file":
            _, entry = route
            self._send(200, fixture.manifest.body(entry), entry.media_type)
        elif route[0] == "redirect":
            _, status, location = route
            self._send(status, b"", "text/plain", location)
        else:
            self._send(route[1], b"not found\n", "text/plain")

    do_HEAD = do_GET

    def do_POST(self):
        self.server.fixture.record(self.command, self.path)
        self._send(405, b"method not allowed\n", "text/plain")

    do_PUT = do_DELETE = do_POST


class FixtureServer:
    """Serve a corpus on 127.0.0.1.

    ``overrides`` maps request paths to ``(status, location_or_None)`` and
    wins over the manifest, so tests can inject redirects and errors.
    Usable as a context manager.
    """

    def __init__(self, corpus_dir=None, port: int = 0, log_path=None, overrides: Optional[dict] = None):
        self.manifest: CorpusManifest = load_manifest(corpus_dir)
        self.port = port
        self.log_path = Path(log_path) if log_path else None
        self.overrides = dict(overrides or {})
        self.requests: list[tuple[str, str, str]] = []  # (timestamp, method, path)
        self._lock = threading.Lock()
        self._httpd: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def url(self, path: str) -> str:
        return self.base_url + path

    def route(self, path: str):
        if path in self.overrides:
            status, location = self.overrides[path]
            if location:
                return ("redirect", status, location)
            return ("error", status)
        if path in self.manifest.redirects:
            status, location = self.manifest.redirects[path]
            return ("redirect", status, location)
        entry = self.manifest.entries.get(path)
        if entry is not None:
            return ("file", entry)
        return ("error", self.manifest.errors.get(path, 404))

    def record(self, method: str, path: str):
        stamp = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        with self._lock:
            self.requests.append((stamp, method, path))
            if self.log_path is not None:
                with open(self.log_path, "a", encoding="utf-8") as fh:
                    fh.write(f"{stamp}\t{method}\t{path}\n")

    def requested_paths(self) -> list[str]:
        with self._lock:
            return [p for _, _, p in self.requests]

    def start(self) -> "FixtureServer":
        try:
            self._httpd = ThreadingHTTPServer(("127.0.0.1", self.port), _Handler)
        except OSError as exc:
            raise FixtureError(f"cannot listen on port {self.port}: {exc}") from None
        self._httpd.daemon_threads = True
        self._httpd.fixture = self
        self.port = self._httpd.server_address[1]
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def serve_forever(self):
        self.start()
        try:
            self._thread.join()
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

"""Live-mode HTTP layer: a thread-pooled listener in front of MediaServer and
the matching client-side endpoint.

The backend's cache, in-flight table, and workers all live on a WallLoop
driven by its own thread. Each HTTP handler thread submits the request
coroutine onto that loop and blocks for the outcome, so live mode exercises
exactly the same decision code as the in-process channel. Payload bytes are
materialized in the handler thread to keep generation work off the loop.

Routes:
    GET /manifest/{seq}              -> JSON manifest
    GET /content/{seq}/{rep}/{index} -> binary segment

Malformed paths map to 400, unknown resources to 404, and a full job queue to
503 with a Retry-After hint; the client endpoint turns 503 back into the
overload signal the retry loop understands.
"""

from __future__ import annotations

import json
import logging
import threading
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .backend import OverloadError
from .client import SegmentFetch
from .content import ConfigError, NotFoundError

__all__ = ["SegmentHttpServer", "HttpEndpoint", "ReceivedBody"]

log = logging.getLogger(__name__)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def do_GET(self):  # noqa: N802 - BaseHTTPRequestHandler contract
        app = self.server.app
        parts = [p for p in self.path.split("?", 1)[0].split("/") if p]
        try:
            if len(parts) == 2 and parts[0] == "manifest":
                self._reply(200, app.media.manifest_bytes(parts[1]), "application/json")
            elif len(parts) == 4 and parts[0] == "content":
                seq, rep, index = parts[1], int(parts[2]), int(parts[3])
                waiter = app.loop.submit(app.media.segment(seq, rep, index))
                payload, path = waiter.wait(app.submit_timeout_s)
                self._reply(200, payload.to_bytes(), "application/octet-stream",
                            extra={"X-Served-Path": path})
            else:
                self._reply(400, b"unrecognized path\n", "text/plain")
        except (ValueError, ConfigError):
            self._reply(400, b"malformed request\n", "text/plain")
        except NotFoundError:
            self._reply(404, b"no such resource\n", "text/plain")
        except OverloadError:
            self._reply(503, b"transcoder overloaded, retry later\n", "text/plain",
                        extra={"Retry-After": "1"})
        except Exception:
            log.exception("request %s failed", self.path)
            self._reply(500, b"internal error\n", "text/plain")

    def _reply(self, code: int, body: bytes, ctype: str, extra: dict | None = None):
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        for key, value in (extra or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)


class SegmentHttpServer:
    """Listener lifecycle around a MediaServer whose loop runs elsewhere.

    The caller owns the WallLoop thread (loop.run_forever); this class owns
    only the socket and its acceptor thread.
    """

    def __init__(self, loop, media, host: str = "127.0.0.1", port: int = 0,
                 submit_timeout_s: float = 60.0):
        self.loop = loop
        self.media = media
        self.submit_timeout_s = submit_timeout_s
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        self._httpd.app = self
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._httpd.server_address[:2]
        return str(host), int(port)

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "SegmentHttpServer":
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="segment-httpd", daemon=True)
        self._thread.start()
        return self

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


class ReceivedBody:
    """Downloaded response body; quacks like a payload for rate accounting."""

    __slots__ = ("data",)

    def __init__(self, data: bytes):
        self.data = data

    @property
    def size(self) -> int:
        return len(self.data)

    def to_bytes(self) -> bytes:
        return self.data


class HttpEndpoint:
    """Client-side request channel for live mode: blocking HTTP in a worker
    thread, resolved back onto the caller's loop.

    Timing mirrors the in-process channel: requested_at before the request
    goes out, transfer_start once headers arrive (server think time over),
    completed_at after the body is drained - so the throughput estimate sees
    the transfer phase only.
    """

    def __init__(self, loop, base_url: str, timeout_s: float = 30.0):
        self.loop = loop
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    async def manifest(self, seq: str) -> dict:
        body = await self.loop.run_in_thread(self._get, f"/manifest/{seq}")
        return json.loads(body.data.decode("utf-8"))

    async def segment(self, seq: str, rep: int, index: int) -> SegmentFetch:
        return await self.loop.run_in_thread(
            self._get_timed, f"/content/{seq}/{rep}/{index}")

    # -- blocking internals (worker threads) -----------------------------------

    def _open(self, path: str):
        try:
            return urllib.request.urlopen(self.base_url + path, timeout=self.timeout_s)
        except urllib.error.HTTPError as err:
            err.close()
            if err.code == 503:
                raise OverloadError(f"server overloaded for {path}") from None
            if err.code == 404:
                raise NotFoundError(path) from None
            raise

    def _get(self, path: str) -> ReceivedBody:
        with self._open(path) as resp:
            return ReceivedBody(resp.read())

    def _get_timed(self, path: str) -> SegmentFetch:
        requested = self.loop.now()
        resp = self._open(path)
        transfer_start = self.loop.now()
        with resp:
            body = ReceivedBody(resp.read())
        return SegmentFetch(body, requested, transfer_start, self.loop.now())

"""Read-only SPARQL query endpoint (``GET``/``POST /sparql``)."""

from __future__ import annotations

import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable
from urllib.parse import parse_qs, urlsplit

from .sparql import DEFAULT_ROW_CAP, JSON_MEDIA_TYPE, QuerySyntaxError, QueryTooLarge, evaluate, parse_query
from .sparql.results import to_json
from .store import Snapshot

log = logging.getLogger(__name__)


def run_query(snapshot: Snapshot, text: str, row_cap: int = DEFAULT_ROW_CAP) -> str:
    """The exact JSON body both the CLI and the endpoint return for ``text``."""
    return to_json(evaluate(snapshot, parse_query(text), row_cap))


def _handler(provider: Callable[[], Snapshot], row_cap: int):
    class SparqlHandler(BaseHTTPRequestHandler):
        server_version = "visionkg"

        def log_message(self, fmt, *args):
            log.info("%s - " + fmt, self.address_string(), *args)

        def _send(self, status: int, body: str, content_type: str):
            data = body.encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", f"{content_type}; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _answer(self, text):
            if text is None:
                self._send(400, "missing 'query' parameter\n", "text/plain")
                return
            snapshot = provider()
            try:
                body = run_query(snapshot, text, row_cap)
            except QuerySyntaxError as exc:
                self._send(400, f"{exc}\n", "text/plain")
            except QueryTooLarge as exc:
                self._send(413, f"{exc}\n", "text/plain")
            else:
                self._send(200, body, JSON_MEDIA_TYPE)

        def do_GET(self):
            url = urlsplit(self.path)
            if url.path != "/sparql":
                self._send(404, "not found\n", "text/plain")
                return
            values = parse_qs(url.query, keep_blank_values=True).get("query")
            self._answer(values[0] if values else None)

        def do_POST(self):
            url = urlsplit(self.path)
            if url.path != "/sparql":
                self._send(404, "not found\n", "text/plain")
                return
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                body = raw.decode("utf-8")
            except UnicodeDecodeError:
                self._send(400, "request body is not UTF-8\n", "text/plain")
                return
            media = (self.headers.get("Content-Type") or "").split(";")[0].strip().lower()
            if media == "application/sparql-query":
                self._answer(body)
            elif media == "application/x-www-form-urlencoded":
                values = parse_qs(body, keep_blank_values=True).get("query")
                self._answer(values[0] if values else None)
            else:
                self._send(415, "expected application/sparql-query\n", "text/plain")

    return SparqlHandler


def make_server(provider: Callable[[], Snapshot], host: str = "127.0.0.1", port: int = 8080,
                row_cap: int = DEFAULT_ROW_CAP) -> ThreadingHTTPServer:
    """Bind (without serving). Each request evaluates against ``provider()`` taken at its start."""
    server = ThreadingHTTPServer((host, port), _handler(provider, row_cap))
    server.daemon_threads = True
    return server


def serve_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread

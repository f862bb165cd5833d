"""Shared fixtures: tasks, stub backends, and a canned-response HTTP server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from sgicl import StubBackend, StubScript, builtin_task

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def sst2():
    return builtin_task("sst2")


@pytest.fixture
def sst5():
    return builtin_task("sst5")


@pytest.fixture
def rte():
    return builtin_task("rte")


@pytest.fixture
def cb():
    return builtin_task("cb")


@pytest.fixture
def stub_backend():
    """Empty-script stub in hash score mode: deterministic, varied scores."""
    return StubBackend(StubScript(score_mode="hash"))


def make_stub(**script_kwargs) -> StubBackend:
    return StubBackend(StubScript(**script_kwargs))


class _CannedHandler(BaseHTTPRequestHandler):
    """Replies from a programmable queue/handler and records every request."""

    server_version = "canned/0"

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        record = {
            "path": self.path,
            "body": body,
            "headers": {k.lower(): v for k, v in self.headers.items()},
        }
        self.server.requests.append(record)
        status, payload = self.server.responder(record)
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class CannedServer:
    def __init__(self):
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _CannedHandler)
        self._httpd.requests = []
        self._httpd.responder = lambda record: (200, {"choices": [{"text": ""}]})
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self) -> list:
        return self._httpd.requests

    def respond_with(self, responder) -> None:
        """responder(record) -> (status, json payload)"""
        self._httpd.responder = responder

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def canned_server():
    server = CannedServer()
    yield server
    server.close()

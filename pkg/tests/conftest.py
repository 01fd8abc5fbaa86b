"""Shared test helpers: scripted runtimes, fixture locations, a stub server."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from conductor import Runtime, Trace, make_scripted_engine

FIXTURES = Path(__file__).parent / "fixtures"
PROGRAMS = FIXTURES / "programs"


def fenced(code: str, lang: str = "python") -> str:
    return f"```{lang}\n{code}\n```"


def boxed(answer: str) -> str:
    return f"Working it through.\n\\boxed{{{answer}}}"


def make_runtime(script, run_id: str = "test", path=None, **kwargs) -> Runtime:
    """Runtime over a scripted engine with an (optionally persisted) trace."""
    engine = make_scripted_engine(script)
    trace = Trace(run_id, path=path, deterministic=True)
    return Runtime(engine=engine, trace=trace, **kwargs)


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS


class StubChatHandler(BaseHTTPRequestHandler):
    """Scriptable chat-completion endpoint for transport tests.

    ``behaviors`` is consumed one entry per request; when empty,
    ``default_behavior`` answers instead (or a 500 if unset).
    """

    behaviors: list = []
    default_behavior: tuple | None = None
    requests_seen: list = []
    _lock = threading.Lock()

    def do_POST(self):  # noqa: N802 - http.server API
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        cls = type(self)
        with cls._lock:
            cls.requests_seen.append(body)
            behavior = cls.behaviors.pop(0) if cls.behaviors else None
        if behavior is None:
            behavior = cls.default_behavior or ("status", 500)
        kind, value = behavior
        if kind == "sleep":
            time.sleep(value)
            self._reply(200, {"choices": [{"message": {"content": "late"}}]})
        elif kind == "status":
            self._reply(value, {"error": "scripted failure"})
        elif kind == "garbage":
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(b"this is not json")
        else:
            self._reply(200, value)

    def _reply(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # silence test output
        pass


def ok_chat_payload(text: str, prompt_tokens: int = 7, completion_tokens: int = 2) -> dict:
    return {
        "choices": [{"message": {"content": text}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    }


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubChatHandler)
    StubChatHandler.behaviors = []
    StubChatHandler.default_behavior = None
    StubChatHandler.requests_seen = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    server.server_close()

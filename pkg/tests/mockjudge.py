"""A local chat-completion endpoint for judge tests (binds 127.0.0.1 only)."""
from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class MockJudge:
    """``responder(body: dict) -> (status, payload)``; payload dicts are JSON-encoded."""

    def __init__(self, responder=None, delay: float = 0.0):
        self.responder = responder or (lambda body: (200, {"meaning": 5, "readability": 5, "mpn": 5}))
        self.delay = delay
        self.requests = []
        self.in_flight = 0
        self.max_in_flight = 0
        self._lock = threading.Lock()
        judge = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                raw = self.rfile.read(int(self.headers.get("Content-Length", 0)))
                with judge._lock:
                    judge.in_flight += 1
                    judge.max_in_flight = max(judge.max_in_flight, judge.in_flight)
                    judge.requests.append({"headers": dict(self.headers), "body": raw})
                try:
                    if judge.delay:
                        time.sleep(judge.delay)
                    status, payload = judge.responder(json.loads(raw))
                    data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                finally:
                    with judge._lock:
                        judge.in_flight -= 1

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"
        self._thread = threading.Thread(target=self.server.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def prompt_of(body: dict) -> str:
    return body["messages"][0]["content"]


def chat_reply(scores: dict) -> dict:
    return {"choices": [{"index": 0, "message": {"role": "assistant", "content": json.dumps(scores)}}]}

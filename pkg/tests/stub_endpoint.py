"""In-process chat-completion stub used by the model-runner tests."""

from __future__ import annotations

import json
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

_TRANSCRIPT_RE = re.compile(r'Transcript: "(.*)"', re.DOTALL)


def render_template(utt) -> str:
    """Canonical filled output template for a ground-truth utterance."""
    lines = [
        f"SPEAKER: {utt.speaker.value}",
        f"INTENT: {utt.intent.value}",
        f"ACTION: {utt.action.action_type.value}",
        "SLOTS:",
    ]
    for name, value in utt.action.slots.items():
        lines.append(f"- {name}: {value}")
    lines.append("ENTITIES:")
    for span in utt.entities:
        lines.append(f"- {span.entity_type.value}: {span.text}")
    return "\n".join(lines)


def transcript_of(prompt: str) -> str:
    match = _TRANSCRIPT_RE.search(prompt)
    return match.group(1) if match else ""


class StubEndpoint:
    """Tiny HTTP server mimicking a chat-completion endpoint.

    reply_fn(prompt) -> assistant text; fail_first injects that many 500s
    before the first success (shared across all requests); delay_seconds
    sleeps inside the handler. Tracks the high-water mark of concurrent
    in-flight requests.
    """

    def __init__(self, reply_fn, delay_seconds: float = 0.0, fail_first: int = 0):
        self.reply_fn = reply_fn
        self.delay_seconds = delay_seconds
        self.failures_left = fail_first
        self.lock = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0
        self.request_count = 0

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802 (http.server API)
                with stub.lock:
                    stub.request_count += 1
                    stub.in_flight += 1
                    stub.max_in_flight = max(stub.max_in_flight, stub.in_flight)
                    fail = stub.failures_left > 0
                    if fail:
                        stub.failures_left -= 1
                try:
                    length = int(self.headers.get("Content-Length", "0"))
                    payload = json.loads(self.rfile.read(length) or b"{}")
                    if stub.delay_seconds:
                        time.sleep(stub.delay_seconds)
                    if fail:
                        self.send_response(500)
                        self.end_headers()
                        self.wfile.write(b"{}")
                        return
                    prompt = payload.get("messages", [{}])[0].get("content", "")
                    content = stub.reply_fn(prompt)
                    body = json.dumps(
                        {"choices": [{"message": {"role": "assistant", "content": content}}]}
                    ).encode("utf-8")
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                finally:
                    with stub.lock:
                        stub.in_flight -= 1

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        return False


def echo_endpoint(corpus, **kwargs) -> StubEndpoint:
    """Stub that answers every transcript with its ground-truth template."""
    by_transcript = {u.transcript: u for u in corpus.utterances}

    def reply(prompt: str) -> str:
        utt = by_transcript.get(transcript_of(prompt))
        return render_template(utt) if utt is not None else ""

    return StubEndpoint(reply, **kwargs)

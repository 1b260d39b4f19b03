"""In-process mock HTTP servers speaking the engine's wire formats.

Three servers ship: a claims:search-shaped fact-check service, an embedding
endpoint (`POST {"inputs": [...]}`), and a chat/completions endpoint. They
exist so the real HTTP clients can be exercised end-to-end in tests and
demos without credentials or network access.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .embedding import HashedBagOfWordsEmbedder


class _MockServer:
    """Base: ephemeral-port threading HTTP server with context management."""

    def __init__(self):
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), self._handler_class())
        self._server.owner = self
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self.request_count = 0
        self._lock = threading.Lock()

    def _handler_class(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def _count(self) -> int:
        with self._lock:
            self.request_count += 1
            return self.request_count

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        return False


class _SilentHandler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):  # noqa: A002 - silence request logging
        pass

    def _send_json(self, payload, status: int = 200):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_raw(self, body: bytes, status: int = 200):
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class MockFactCheckServer(_MockServer):
    """claims:search lookalike.

    `store` maps exact claim text to a full response payload. Sentinel
    payloads: {"__status__": N} answers with that HTTP status and
    {"__malformed__": true} answers 200 with unparseable JSON. Unknown
    queries get the `default` payload (empty object, i.e. no matches).
    """

    def __init__(self, store: dict | None = None, *, default: dict | None = None, require_key: bool = True):
        self.store = store or {}
        self.default = default if default is not None else {}
        self.require_key = require_key
        super().__init__()

    def _handler_class(self):
        server = self

        class Handler(_SilentHandler):
            def do_GET(self):
                server._count()
                parsed = urlparse(self.path)
                params = parse_qs(parsed.query)
                if server.require_key and not params.get("key", [""])[0]:
                    self._send_json({"error": "missing API key"}, status=403)
                    return
                query = params.get("query", [""])[0]
                payload = server.store.get(query, server.default)
                if isinstance(payload, dict) and "__status__" in payload:
                    self._send_json({}, status=int(payload["__status__"]))
                    return
                if isinstance(payload, dict) and payload.get("__malformed__"):
                    self._send_raw(b"{this is not json", status=200)
                    return
                self._send_json(payload)

        return Handler


def factcheck_payload(
    claim_text: str,
    textual_rating: str,
    *,
    publisher: str = "Example Checker",
    url: str = "https://factcheck.example.org/review/1",
    review_date: str | None = "2024-01-01",
) -> dict:
    """Build a single-claim, single-review claims:search response."""
    review = {
        "textualRating": textual_rating,
        "publisher": {"name": publisher},
        "url": url,
    }
    if review_date is not None:
        review["reviewDate"] = review_date
    return {"claims": [{"text": claim_text, "claimReview": [review]}]}


class MockEmbeddingServer(_MockServer):
    """Embedding endpoint: POST {"inputs": [...]} -> [[floats], ...].

    Answers with the deterministic local scheme so remote and local runs
    agree. `fail_first` makes the first N requests return HTTP 500 to
    exercise retry paths.
    """

    def __init__(self, dimension: int = 8, *, fail_first: int = 0):
        self.embedder = HashedBagOfWordsEmbedder(dimension)
        self.fail_first = fail_first
        super().__init__()

    def _handler_class(self):
        server = self

        class Handler(_SilentHandler):
            def do_POST(self):
                n = server._count()
                if n <= server.fail_first:
                    self._send_json({"error": "transient"}, status=500)
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                rows = [server.embedder.embed(text).tolist() for text in body["inputs"]]
                self._send_json(rows)

        return Handler


class MockCompletionServer(_MockServer):
    """Chat/completions endpoint answering from ordered substring rules.

    `rules` is a list of {"prompt_contains": ..., "content": ...}; the first
    match wins, falling back to `default`. `status_sequence` forces the
    next requests to the listed HTTP statuses (for retry/backoff tests).
    """

    def __init__(self, rules: list[dict] | None = None, *, default: str = "", status_sequence: list[int] | None = None):
        self.rules = rules or []
        self.default = default
        self.status_sequence = list(status_sequence or [])
        super().__init__()

    def _handler_class(self):
        server = self

        class Handler(_SilentHandler):
            def do_POST(self):
                server._count()
                with server._lock:
                    forced = server.status_sequence.pop(0) if server.status_sequence else None
                if forced is not None and forced != 200:
                    self._send_json({"error": f"forced {forced}"}, status=forced)
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                prompt = body.get("messages", [{}])[-1].get("content", "")
                content = server.default
                for rule in server.rules:
                    if rule.get("prompt_contains", "") in prompt:
                        content = rule["content"]
                        break
                self._send_json({"choices": [{"message": {"content": content}}]})

        return Handler

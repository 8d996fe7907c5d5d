"""HTTP query service over a loaded ranking engine.

Endpoints:
    GET  /health          -> 200 {"status": "ok"}
    POST /rank            -> ranking JSON, byte-identical to the CLI's
                             output for the same query
The request body is ``{"text": str, "k"?: int, "strategy"?: str}``.

Requests run concurrently against one immutable engine generation;
``reload()`` builds a fresh engine and swaps the reference atomically,
so in-flight queries finish on the generation they started with. The
``serve`` command wires SIGHUP to ``reload()``.
"""
from __future__ import annotations

import json
import logging
import signal
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import Config
from .errors import BuglocError
from .indexer import stable_hash64
from .pipeline import RankingEngine, render_ranking
from .ranker import STRATEGIES

logger = logging.getLogger(__name__)


class RankRequestHandler(BaseHTTPRequestHandler):
    server_version = "bugloc"

    def _send(self, status: int, payload: str, content_type: str = "application/json") -> None:
        body = payload.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802 - http.server naming
        if self.path == "/health":
            self._send(200, json.dumps({"status": "ok"}) + "\n")
        else:
            self._send(404, json.dumps({"error": "not found"}) + "\n")

    def do_POST(self) -> None:  # noqa: N802
        if self.path != "/rank":
            self._send(404, json.dumps({"error": "not found"}) + "\n")
            return
        engine: RankingEngine = self.server.engine  # pinned generation for this request
        try:
            length = int(self.headers.get("Content-Length") or 0)
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            if not isinstance(payload, dict):
                raise ValueError("body must be a JSON object")
            text = payload.get("text")
            if not isinstance(text, str) or not text.strip():
                raise ValueError("'text' must be a non-empty string")
            k = payload.get("k")
            if k is not None and (not isinstance(k, int) or k < 1):
                raise ValueError("'k' must be a positive integer")
            strategy = payload.get("strategy")
            if strategy is not None and strategy not in STRATEGIES:
                raise ValueError(f"'strategy' must be one of {STRATEGIES}")
        except (ValueError, json.JSONDecodeError) as exc:
            self._send(400, json.dumps({"error": str(exc)}) + "\n")
            return
        doc = engine.rank(f"query-{stable_hash64(text)}", text, k=k, strategy=strategy)
        self._send(200, render_ranking(doc))

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s - %s", self.address_string(), fmt % args)


class RankServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: Config, port: int):
        self.config = config
        self.engine = RankingEngine.load(config)
        self._reload_lock = threading.Lock()
        super().__init__(("127.0.0.1", port), RankRequestHandler)

    def reload(self) -> None:
        """Load a fresh engine from disk and swap it in atomically."""
        with self._reload_lock:
            engine = RankingEngine.load(self.config)
            self.engine = engine
        logger.info(
            "engine reloaded: %d segments, %d commits",
            len(engine.segment_store),
            len(engine.commit_store),
        )


def run_service(config: Config, port: int) -> None:
    try:
        server = RankServer(config, port)
    except OSError as exc:
        raise BuglocError(f"cannot bind port {port}: {exc}") from exc
    signal.signal(signal.SIGHUP, lambda *_: server.reload())
    logger.warning("serving on http://127.0.0.1:%d (SIGHUP reloads the store)", server.server_port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

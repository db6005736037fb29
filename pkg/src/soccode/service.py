"""JSON-over-HTTP prediction service.

Endpoints::

    POST /predict        {"description": "..."} -> {"soc_code": "...", "model_version": "..."}
    GET  /healthz        -> model metadata
    POST /admin/reload   {"path": "..."} -> swaps in a newly loaded pipeline

Errors are returned as {"error": "..."} with status 400, 404, 405, 413 or 500.
"""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .pipeline import Pipeline, load_pipeline, predict_one

logger = logging.getLogger(__name__)

DEFAULT_MAX_BODY = 1 << 20
DEFAULT_TIMEOUT = 30.0


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "_Server"

    def setup(self):
        self.timeout = self.server.request_timeout
        super().setup()

    def log_message(self, format, *args):
        logger.debug("%s - %s", self.address_string(), format % args)

    def _send(self, status: int, body: dict) -> None:
        raw = json.dumps(body, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def _error(self, status: int, message: str) -> None:
        self._send(status, {"error": message})

    def _read_json(self):
        """Parsed JSON object from the body, or None after an error response."""
        length = self.headers.get("Content-Length")
        if length is None:
            self.close_connection = True
            self._error(HTTPStatus.BAD_REQUEST, "missing Content-Length")
            return None
        try:
            n = int(length)
        except ValueError:
            self.close_connection = True
            self._error(HTTPStatus.BAD_REQUEST, "invalid Content-Length")
            return None
        if n > self.server.max_body:
            # do not read an oversized body; drop the connection afterwards
            self.close_connection = True
            self._error(HTTPStatus.REQUEST_ENTITY_TOO_LARGE,
                        f"request body of {n} bytes exceeds limit of {self.server.max_body} bytes")
            return None
        raw = self.rfile.read(n)
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._error(HTTPStatus.BAD_REQUEST, f"malformed JSON: {exc}")
            return None
        if not isinstance(body, dict):
            self._error(HTTPStatus.BAD_REQUEST, "request body must be a JSON object")
            return None
        return body

    def do_GET(self):
        if self.path == "/healthz":
            p = self.server.pipeline
            self._send(HTTPStatus.OK, {
                "status": "ok",
                "model_version": p.model_version,
                "representation": p.representation,
                "algorithm": p.classifier.algorithm,
                "dim": p.dim,
                "classes": list(p.labels.labels),
                "created_at": p.metadata.get("created_at"),
            })
        elif self.path in ("/predict", "/admin/reload"):
            self._error(HTTPStatus.METHOD_NOT_ALLOWED, f"{self.path} requires POST")
        else:
            self._error(HTTPStatus.NOT_FOUND, f"no such endpoint: {self.path}")

    def do_POST(self):
        if self.path == "/predict":
            self._predict()
        elif self.path == "/admin/reload":
            self._reload()
        else:
            self._error(HTTPStatus.NOT_FOUND, f"no such endpoint: {self.path}")

    def _predict(self):
        body = self._read_json()
        if body is None:
            return
        description = body.get("description")
        if not isinstance(description, str) or not description.strip():
            self._error(HTTPStatus.BAD_REQUEST, "field 'description' must be a non-empty string")
            return
        p = self.server.pipeline  # one read: a concurrent reload cannot mix models
        try:
            code = predict_one(p, description)
        except Exception:
            logger.exception("prediction failed")
            self._error(HTTPStatus.INTERNAL_SERVER_ERROR, "prediction failed")
            return
        self._send(HTTPStatus.OK, {"soc_code": code, "model_version": p.model_version})

    def _reload(self):
        if not self.server.allow_reload:
            self._error(HTTPStatus.NOT_FOUND, "reload is disabled")
            return
        body = self._read_json()
        if body is None:
            return
        path = body.get("path")
        if not isinstance(path, str) or not path:
            self._error(HTTPStatus.BAD_REQUEST, "field 'path' must be a non-empty string")
            return
        try:
            p = load_pipeline(path)
        except (OSError, ValueError) as exc:
            self._error(HTTPStatus.BAD_REQUEST, f"cannot load pipeline: {exc}")
            return
        self.server.pipeline = p
        logger.info("reloaded pipeline %s from %s", p.model_version, path)
        self._send(HTTPStatus.OK, {"status": "reloaded", "model_version": p.model_version})


class _Server(ThreadingHTTPServer):
    daemon_threads = False
    block_on_close = True
    request_queue_size = 128  # listen backlog; the socketserver default of 5 resets bursts

    def __init__(self, address, pipeline, max_body, request_timeout, allow_reload):
        self.pipeline = pipeline
        self.max_body = max_body
        self.request_timeout = request_timeout
        self.allow_reload = allow_reload
        super().__init__(address, _Handler)


class PredictionService:
    """Owns the HTTP server; ``port=0`` binds an ephemeral port."""

    def __init__(self, pipeline: Pipeline, host: str = "127.0.0.1", port: int = 8000,
                 max_body: int = DEFAULT_MAX_BODY, timeout: float = DEFAULT_TIMEOUT, allow_reload: bool = True):
        self._server = _Server((host, port), pipeline, max_body, timeout, allow_reload)
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self._server.server_address[0]

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    @property
    def pipeline(self) -> Pipeline:
        return self._server.pipeline

    def reload(self, pipeline: Pipeline) -> None:
        self._server.pipeline = pipeline

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def start(self) -> "PredictionService":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def shutdown(self) -> None:
        """Stop accepting requests, wait for in-flight handlers, release the socket."""
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.shutdown()


def serve(p: Pipeline, bind_address: str = "127.0.0.1", port: int = 8000, **kwargs) -> PredictionService:
    """Start the service in a background thread and return it."""
    return PredictionService(p, bind_address, port, **kwargs).start()

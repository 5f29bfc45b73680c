"""HTTP inference service over one loaded .kosm bundle.

Three routes: GET /api/metadata feeds the client's dropdowns, POST
/api/predict prices a request, GET /healthz is a constant-time liveness
probe. The bundle is immutable after startup, so requests share it
without locks and no request can change another's answer.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .bundle import ModelBundle, predict

MAX_BODY_BYTES = 64 * 1024


def metadata_payload(bundle: ModelBundle) -> dict:
    """Client-facing view of the bundle, in vocabulary order."""
    return {
        "cities": list(bundle.encoder.vocabularies["kota"].tokens),
        "areas_by_city": {c: list(a) for c, a in bundle.areas_by_city.items()},
        "types": list(bundle.encoder.vocabularies["type_kos"].tokens),
        "facilities": list(bundle.facility_catalog),
        "model": {
            "arch": bundle.metadata.arch_summary,
            "validation_mae_idr": bundle.metadata.val_mae,
            "format_version": bundle.metadata.format_version,
        },
    }


def parse_predict_request(body: bytes) -> tuple[dict | None, str | None]:
    """Validate a predict body; returns (fields, error message)."""
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None, "request body is not valid JSON"
    if not isinstance(doc, dict):
        return None, "request body must be a JSON object"
    fields = {}
    for name in ("kota", "area", "type_kos"):
        if name not in doc:
            return None, f"missing required field: {name}"
        if not isinstance(doc[name], str):
            return None, f"field {name} must be a string"
        fields[name] = doc[name]
    facilities = doc.get("facilities", [])
    if not isinstance(facilities, list) or any(
        not isinstance(f, str) for f in facilities
    ):
        return None, "field facilities must be a list of strings"
    fields["facilities"] = facilities
    return fields, None


class InferenceHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def bundle(self) -> ModelBundle:
        return self.server.bundle

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        if getattr(self.server, "verbose", False):
            super().log_message(format, *args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        if self.path.startswith("/api/"):
            self._cors_headers()
        if status >= 400:
            # The request body may be partly unread; drop the connection so
            # leftovers cannot masquerade as a follow-up request.
            self.send_header("Connection", "close")
            self.close_connection = True
        self.end_headers()
        self.wfile.write(body)

    def _cors_headers(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _method_not_allowed(self, allowed: str) -> None:
        self.send_response(405)
        self.send_header("Allow", allowed)
        self.send_header("Content-Length", "0")
        self.send_header("Connection", "close")
        self.close_connection = True
        self.end_headers()

    def do_GET(self):
        if self.path == "/api/metadata":
            self._send_json(200, self.server.metadata)
        elif self.path == "/healthz":
            self._send_json(
                200,
                {"status": "ok", "format_version": self.bundle.metadata.format_version},
            )
        elif self.path == "/api/predict":
            self._method_not_allowed("POST, OPTIONS")
        else:
            self._send_json(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/api/predict":
            if self.path in ("/api/metadata", "/healthz"):
                self._method_not_allowed("GET")
            else:
                self._send_json(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0") or "0")
        except ValueError:
            self._send_json(400, {"error": "invalid Content-Length header"})
            return
        if length > MAX_BODY_BYTES:
            self._send_json(413, {"error": f"body exceeds {MAX_BODY_BYTES} bytes"})
            return
        body = self.rfile.read(length) if length > 0 else b""
        fields, error = parse_predict_request(body)
        if error is not None:
            self._send_json(400, {"error": error})
            return
        result = predict(
            self.bundle,
            kota=fields["kota"],
            area=fields["area"],
            type_kos=fields["type_kos"],
            facilities=fields["facilities"],
        )
        self._send_json(200, result.as_dict())

    def do_OPTIONS(self):
        self.send_response(204)
        if self.path.startswith("/api/"):
            self._cors_headers()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_PUT(self):
        self._reject_method()

    def do_DELETE(self):
        self._reject_method()

    def do_PATCH(self):
        self._reject_method()

    def _reject_method(self):
        if self.path in ("/api/predict",):
            self._method_not_allowed("POST, OPTIONS")
        elif self.path in ("/api/metadata", "/healthz"):
            self._method_not_allowed("GET")
        else:
            self._send_json(404, {"error": "not found"})


class InferenceServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, bundle: ModelBundle, bind: str = "127.0.0.1", port: int = 8080,
                 verbose: bool = False):
        super().__init__((bind, port), InferenceHandler)
        self.bundle = bundle
        self.metadata = metadata_payload(bundle)
        self.verbose = verbose


def make_server(bundle: ModelBundle, bind: str = "127.0.0.1", port: int = 8080,
                verbose: bool = False) -> InferenceServer:
    return InferenceServer(bundle, bind=bind, port=port, verbose=verbose)

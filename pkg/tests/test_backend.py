import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from textguard.backend import (
    BackendEndpoint,
    BackendError,
    ProtocolError,
    remote_mlm,
    remote_predict,
    remote_translate,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures" / "backend"


class _Handler(BaseHTTPRequestHandler):
    """Minimal in-process backend honoring the wire protocol for tests."""

    responses = {}

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        key = self.path
        handler = self.responses.get(key)
        if handler is None:
            self.send_response(404)
            self.end_headers()
            return
        payload = handler(body)
        raw = json.dumps(payload).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


@pytest.fixture
def endpoint(stub_server):
    return BackendEndpoint(base_url=stub_server, timeout=5.0)


class TestRemotePredict:
    def test_arity_and_order(self, endpoint):
        _Handler.responses = {
            "/v1/predict": lambda body: {"probs": [[0.9, 0.1]] * len(body["texts"])}
        }
        out = remote_predict(endpoint, ["a", "b"])
        assert out == [[0.9, 0.1], [0.9, 0.1]]

    def test_non_normalized_row_rejected(self, endpoint):
        _Handler.responses = {"/v1/predict": lambda body: {"probs": [[0.5, 0.3]]}}
        with pytest.raises(ProtocolError, match="sums to"):
            remote_predict(endpoint, ["a"])

    def test_wrong_arity_rejected(self, endpoint):
        _Handler.responses = {"/v1/predict": lambda body: {"probs": [[0.5, 0.5]]}}
        with pytest.raises(ProtocolError, match="rows"):
            remote_predict(endpoint, ["a", "b"])

    def test_transport_failure_is_error_not_fallback(self):
        dead = BackendEndpoint(base_url="http://127.0.0.1:1", timeout=0.2,
                               fallback="rule_based")
        with pytest.raises(BackendError):
            remote_predict(dead, ["a"])

    def test_capability_must_be_declared(self, stub_server):
        endpoint = BackendEndpoint(base_url=stub_server, capabilities=frozenset({"mlm"}))
        with pytest.raises(BackendError, match="predict"):
            remote_predict(endpoint, ["a"])

    def test_golden_fixture_replay(self, endpoint):
        fixture = json.loads((FIXTURES / "predict_basic.json").read_text())
        _Handler.responses = {"/v1/predict": lambda body: fixture["response"]}
        out = remote_predict(endpoint, fixture["request"]["texts"])
        assert out == fixture["response"]["probs"]


class TestRemoteMlm:
    def test_top_k_arity_enforced(self, endpoint):
        _Handler.responses = {
            "/v1/mlm": lambda body: {
                "suggestions": [["w"] * body["top_k"] for _ in body["mask_indices"]]
            }
        }
        out = remote_mlm(endpoint, "a good film", [1], top_k=3)
        assert out == [["w", "w", "w"]]

    def test_wrong_top_k_rejected(self, endpoint):
        _Handler.responses = {"/v1/mlm": lambda body: {"suggestions": [["only-one"]]}}
        with pytest.raises(ProtocolError, match="top_k"):
            remote_mlm(endpoint, "a good film", [1], top_k=3)


class TestRemoteTranslate:
    def test_round_trip_text(self, endpoint):
        _Handler.responses = {"/v1/translate": lambda body: {"text": body["text"] + " [bt]"}}
        assert remote_translate(endpoint, "a film", pivot="de") == "a film [bt]"

    def test_empty_reply_rejected(self, endpoint):
        _Handler.responses = {"/v1/translate": lambda body: {"text": ""}}
        with pytest.raises(ProtocolError):
            remote_translate(endpoint, "a film")


class TestEndpointValidation:
    def test_needs_capability(self):
        with pytest.raises(ValueError, match="capability"):
            BackendEndpoint(base_url="http://x", capabilities=frozenset())

    def test_unknown_capability_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            BackendEndpoint(base_url="http://x", capabilities=frozenset({"divine"}))

    def test_unknown_fallback_rejected(self):
        with pytest.raises(ValueError, match="fallback"):
            BackendEndpoint(base_url="http://x", fallback="improvise")

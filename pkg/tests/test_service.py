import http.client
import json
import threading

import numpy as np
import pytest

from kospred.bundle import predict
from kospred.service import make_server, metadata_payload


@pytest.fixture(scope="module")
def server(trained_bundle):
    srv = make_server(trained_bundle, bind="127.0.0.1", port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def request(server, method, path, body=None, headers=None):
    conn = http.client.HTTPConnection("127.0.0.1", server.server_address[1], timeout=10)
    try:
        conn.request(method, path, body=body, headers=headers or {})
        resp = conn.getresponse()
        return resp.status, resp.read(), dict(resp.getheaders())
    finally:
        conn.close()


def post_json(server, doc):
    return request(
        server,
        "POST",
        "/api/predict",
        body=json.dumps(doc).encode(),
        headers={"Content-Type": "application/json"},
    )


class TestMetadata:
    def test_derives_from_bundle(self, server, trained_bundle):
        status, body, _ = request(server, "GET", "/api/metadata")
        assert status == 200
        doc = json.loads(body)
        assert doc == metadata_payload(trained_bundle)
        assert doc["cities"] == list(trained_bundle.encoder.vocabularies["kota"].tokens)
        assert doc["facilities"] == list(trained_bundle.facility_catalog)
        assert doc["model"]["format_version"] == 1

    def test_stable_across_calls(self, server):
        first = request(server, "GET", "/api/metadata")[1]
        second = request(server, "GET", "/api/metadata")[1]
        assert first == second

    def test_area_lists_are_vocabulary_decodable(self, server, trained_bundle):
        doc = json.loads(request(server, "GET", "/api/metadata")[1])
        vocab = trained_bundle.encoder.vocabularies["area"]
        for areas in doc["areas_by_city"].values():
            for area in areas:
                assert vocab.lookup(area) >= 1

    def test_cors_header_present(self, server):
        _, _, headers = request(server, "GET", "/api/metadata")
        assert headers.get("Access-Control-Allow-Origin") == "*"


class TestPredictRoute:
    def test_equals_in_process_prediction_exactly(self, server, trained_bundle):
        status, body, _ = post_json(
            server,
            {"kota": "jogja", "area": "depok", "type_kos": "Putri",
             "facilities": ["wifi", "ac"]},
        )
        assert status == 200
        doc = json.loads(body)
        local = predict(trained_bundle, "jogja", "depok", "Putri", ["wifi", "ac"])
        assert doc["price_idr"] == local.price_idr
        assert doc["display_price"] == local.display_price
        assert doc["facility_score_used"] == local.facility_score_used

    def test_empty_facilities_defaults_to_zero_score(self, server):
        status, body, _ = post_json(
            server, {"kota": "jogja", "area": "depok", "type_kos": "Putri",
                     "facilities": []}
        )
        assert status == 200
        assert json.loads(body)["facility_score_used"] == 0

    def test_facilities_field_optional(self, server):
        status, body, _ = post_json(
            server, {"kota": "jogja", "area": "depok", "type_kos": "Putri"}
        )
        assert status == 200
        assert json.loads(body)["facility_score_used"] == 0

    def test_oov_city_is_a_200_with_audit_fields(self, server):
        status, body, _ = post_json(
            server, {"kota": "atlantis", "area": "depok", "type_kos": "Putri",
                     "facilities": []}
        )
        assert status == 200
        assert "kota" in json.loads(body)["oov_fields"]

    @pytest.mark.parametrize("missing", ["kota", "area", "type_kos"])
    def test_missing_field_is_400_naming_it(self, server, missing):
        doc = {"kota": "jogja", "area": "depok", "type_kos": "Putri"}
        del doc[missing]
        status, body, _ = post_json(server, doc)
        assert status == 400
        assert missing in json.loads(body)["error"]

    def test_illtyped_field_is_400(self, server):
        status, body, _ = post_json(
            server, {"kota": 7, "area": "depok", "type_kos": "Putri"}
        )
        assert status == 400
        assert "kota" in json.loads(body)["error"]

    def test_illtyped_facilities_is_400(self, server):
        status, _, _ = post_json(
            server,
            {"kota": "jogja", "area": "depok", "type_kos": "Putri", "facilities": [1]},
        )
        assert status == 400

    def test_non_json_body_is_400(self, server):
        status, _, _ = request(server, "POST", "/api/predict", body=b"\xff\xfe{{{")
        assert status == 400

    def test_oversized_body_is_413(self, server):
        body = b'{"kota": "' + b"a" * (70 * 1024) + b'"}'
        status, _, _ = request(server, "POST", "/api/predict", body=body)
        assert status == 413

    def test_wrong_method_is_405(self, server):
        assert request(server, "GET", "/api/predict")[0] == 405
        assert request(server, "PUT", "/api/predict", body=b"{}")[0] == 405
        assert request(server, "POST", "/api/metadata", body=b"{}")[0] == 405

    def test_unknown_path_is_404(self, server):
        assert request(server, "GET", "/api/nothing")[0] == 404
        assert request(server, "POST", "/api/nothing", body=b"{}")[0] == 404

    def test_fuzzed_bodies_never_crash(self, server):
        rng = np.random.default_rng(23)
        for _ in range(60):
            blob = bytes(rng.integers(0, 256, size=int(rng.integers(0, 400)), dtype=np.uint8))
            status, _, _ = request(server, "POST", "/api/predict", body=blob)
            assert 400 <= status < 500

    def test_request_order_does_not_change_responses(self, server):
        doc = {"kota": "jogja", "area": "depok", "type_kos": "Putri", "facilities": []}
        first = post_json(server, doc)[1]
        post_json(server, {"kota": "x", "area": "y", "type_kos": "z", "facilities": []})
        second = post_json(server, doc)[1]
        assert first == second


class TestHealthz:
    def test_ok_with_format_version(self, server):
        status, body, _ = request(server, "GET", "/healthz")
        assert status == 200
        doc = json.loads(body)
        assert doc["status"] == "ok"
        assert doc["format_version"] == 1

    def test_identical_before_and_after_load(self, server):
        before = request(server, "GET", "/healthz")[1]
        for _ in range(25):
            post_json(
                server,
                {"kota": "jogja", "area": "depok", "type_kos": "Putri",
                 "facilities": ["wifi"]},
            )
        after = request(server, "GET", "/healthz")[1]
        assert before == after

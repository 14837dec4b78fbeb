import numpy as np
import pytest
from fastapi.testclient import TestClient

from textguard.classifier import predict
from textguard.defense import DefenseConfig
from textguard.detector import DetectorModel
from textguard.features import FeatureSpec
from textguard.service import create_app


def fixed_detector(bias: float) -> DetectorModel:
    return DetectorModel(spec=FeatureSpec(hash_dim=64), weights=np.zeros(64), bias=bias)


@pytest.fixture
def compliant_client(small_victim, transform_context):
    config = DefenseConfig(detector=fixed_detector(-2.0), classifier=small_victim,
                           context=transform_context)
    return TestClient(create_app(config)), small_victim


@pytest.fixture
def paranoid_client(small_victim, transform_context):
    config = DefenseConfig(detector=fixed_detector(2.0), classifier=small_victim,
                           context=transform_context, k=3)
    return TestClient(create_app(config)), small_victim


class TestClassifyEndpoint:
    def test_compliant_route_matches_classifier(self, compliant_client):
        client, victim = compliant_client
        text = "the film is really good"
        reply = client.post("/v1/classify", json={"text": text})
        assert reply.status_code == 200
        body = reply.json()
        assert body["route"] == "compliant"
        assert body["transforms"] == []
        assert body["probs"] == pytest.approx(predict(victim, text))

    def test_transformed_route_reports_ids(self, paranoid_client):
        client, _ = paranoid_client
        reply = client.post("/v1/classify", json={"text": "the film is really good"})
        body = reply.json()
        assert body["route"] == "transformed"
        assert len(body["transforms"]) == 3
        assert sum(body["probs"]) == pytest.approx(1.0, abs=1e-6)

    def test_empty_text_rejected(self, compliant_client):
        client, _ = compliant_client
        assert client.post("/v1/classify", json={"text": "   "}).status_code == 400
        assert client.post("/v1/classify", json={"text": ""}).status_code == 422

    def test_health(self, compliant_client):
        client, _ = compliant_client
        reply = client.get("/v1/health")
        assert reply.status_code == 200
        assert reply.json()["status"] == "ok"

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from geoground.dataset import build_dataset
from geoground.ingest import ImageRecord
from geoground.review import ReviewService
from geoground.server import create_app
from tests.test_dataset import make_scene


@pytest.fixture
def setup(tmp_path):
    scenes = [make_scene(f"im{i}", [("airport", {}), ("dam", {})]) for i in range(2)]
    samples = build_dataset(scenes, seed=3)
    images = {}
    for scene in scenes:
        image_id = scene.image.image_id
        file_path = f"{image_id}.png"
        Image.fromarray(np.zeros((800, 800, 3), dtype=np.uint8)).save(tmp_path / file_path)
        images[image_id] = ImageRecord(image_id, 800, 800, file_path)
    service = ReviewService(samples, images=images, log_path=tmp_path / "log.jsonl")
    client = TestClient(create_app(service, images_root=tmp_path))
    return client, service, samples


class TestQueue:
    def test_next_returns_lease_and_sample(self, setup):
        client, service, samples = setup
        body = client.get("/api/queue/next", params={"reviewer": "alice"}).json()
        assert body["done"] is False
        assert body["lease_id"]
        assert body["sample"]["sample_id"] in {s.sample_id for s in samples}
        assert body["sample"]["text"]
        assert body["image_url"].endswith("/image")

    def test_done_when_exhausted(self, setup):
        client, service, samples = setup
        for _ in samples:
            body = client.get("/api/queue/next", params={"reviewer": "alice"}).json()
            client.post("/api/decisions", json={
                "sample_id": body["sample"]["sample_id"],
                "verdict": "accept",
                "reviewer": "alice",
                "lease_id": body["lease_id"],
            })
        final = client.get("/api/queue/next", params={"reviewer": "alice"}).json()
        assert final["done"] is True
        assert final["progress"]["pending"] == 0


class TestDecisions:
    def test_post_decision_ack(self, setup):
        client, service, samples = setup
        body = client.get("/api/queue/next", params={"reviewer": "alice"}).json()
        resp = client.post("/api/decisions", json={
            "sample_id": body["sample"]["sample_id"],
            "verdict": "edit",
            "edited_text": "The huge dam",
            "reviewer": "alice",
            "lease_id": body["lease_id"],
        })
        assert resp.status_code == 200
        assert resp.json()["status"] == "edited"
        assert service.status_of(body["sample"]["sample_id"]) == "edited"

    def test_unknown_sample_404(self, setup):
        client, _, _ = setup
        resp = client.post("/api/decisions", json={
            "sample_id": "missing", "verdict": "accept", "reviewer": "alice"})
        assert resp.status_code == 404

    def test_invalid_edit_422(self, setup):
        client, _, samples = setup
        resp = client.post("/api/decisions", json={
            "sample_id": samples[0].sample_id, "verdict": "edit", "reviewer": "alice"})
        assert resp.status_code == 422

    def test_double_submit_is_idempotent(self, setup):
        client, service, samples = setup
        payload = {"sample_id": samples[0].sample_id, "verdict": "accept",
                   "reviewer": "alice"}
        first = client.post("/api/decisions", json=payload).json()
        second = client.post("/api/decisions", json=payload).json()
        assert first["duplicate"] is False
        assert second["duplicate"] is True
        assert len(service.decisions) == 1


class TestProgressAndImages:
    def test_progress_counts(self, setup):
        client, _, samples = setup
        body = client.get("/api/progress").json()
        assert body == {"pending": len(samples), "accepted": 0,
                        "rejected": 0, "edited": 0}

    def test_image_bytes_with_bbox_header(self, setup):
        client, _, samples = setup
        sample = samples[0]
        resp = client.get(f"/api/samples/{sample.sample_id}/image")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        assert json.loads(resp.headers["x-bbox"]) == list(sample.bbox.as_tuple())
        assert resp.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_image_404_for_unknown_sample(self, setup):
        client, _, _ = setup
        assert client.get("/api/samples/nope/image").status_code == 404

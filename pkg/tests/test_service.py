"""HTTP service contract: the five endpoints, seed replay, method
routing, and column-level diagnostics on malformed rows.
"""

import pytest
from fastapi.testclient import TestClient

from tabcf.cli import load_bundle
from tabcf.service import build_app

ROW = ["red", "crimson", "wood", "55", "50", "matte"]


@pytest.fixture(scope="module")
def client(checkpoint_dir, dataset, small_cfg):
    bundle, class_names = load_bundle(
        dataset,
        str(checkpoint_dir / "diff.ckpt"),
        str(checkpoint_dir / "clf.ckpt"),
        str(checkpoint_dir / "rec.ckpt"),
        str(checkpoint_dir / "tra.ckpt"),
        str(checkpoint_dir / "vae.ckpt"),
    )
    app = build_app(bundle, small_cfg, class_names,
                    checkpoints={"diffusion": str(checkpoint_dir / "diff.ckpt")})
    return TestClient(app)


def test_schema_endpoint(client):
    payload = client.get("/api/schema").json()
    assert [c["name"] for c in payload["columns"]] == [
        "color", "shade", "material", "size", "weight", "finish"]
    assert payload["classes"] == ["pos", "neg"]
    defaults = payload["defaults"]
    assert defaults["B"] == 4
    assert defaults["strategy"] in defaults["strategies"]
    assert defaults["tau"] <= defaults["tau_max"]


def test_models_endpoint(client):
    payload = client.get("/api/models").json()
    assert payload["models"][0]["kind"] == "diffusion"
    assert payload["models"][0]["schema_digest"] == payload["schema_digest"]


def test_predict_probabilities_sum_to_one(client):
    payload = client.post("/api/predict", json={"row": ROW}).json()
    assert abs(sum(payload["probabilities"].values()) - 1.0) < 1e-6
    assert payload["predicted"] in payload["probabilities"]


def test_predict_accepts_object_rows(client):
    names = [c["name"] for c in client.get("/api/schema").json()["columns"]]
    obj = dict(zip(names, ROW))
    a = client.post("/api/predict", json={"row": ROW}).json()
    b = client.post("/api/predict", json={"row": obj}).json()
    assert a == b


def test_counterfactuals_carry_and_replay_seed(client):
    body = {"row": ROW, "desired_label": "pos", "B": 4, "seed": 11}
    first = client.post("/api/counterfactuals", json=body).json()
    assert first["seed"] == 11
    assert len(first["rows"]) == 4
    assert len(first["per_row"]) == 4
    assert first["loss_trace"]
    replay = client.post("/api/counterfactuals", json=body).json()
    assert replay["rows"] == first["rows"]
    assert replay["report"] == first["report"]


def test_method_routing_only_difference(client):
    body = {"row": ROW, "desired_label": "pos", "B": 4, "seed": 11}
    scd = client.post("/api/counterfactuals", json=body).json()
    wachter = client.post("/api/counterfactuals",
                          json={**body, "method": "wachter"}).json()
    assert scd["method"] == "scd"
    assert wachter["method"] == "wachter"
    assert wachter["seed"] == scd["seed"]
    assert wachter["rows"] != scd["rows"]


def test_evaluate_endpoint(client):
    generated = client.post("/api/counterfactuals",
                            json={"row": ROW, "desired_label": "pos",
                                  "seed": 2}).json()
    response = client.post("/api/evaluate",
                           json={"rows": generated["rows"],
                                 "original_row": ROW,
                                 "desired_label": "pos"})
    assert response.status_code == 200
    report = response.json()["report"]
    assert report["validity"] == generated["report"]["validity"]


def test_malformed_row_column_diagnostics(client):
    bad = {"row": ["nope", "crimson", "wood", "x", "50", "matte"],
           "desired_label": "pos"}
    response = client.post("/api/counterfactuals", json=bad)
    assert response.status_code == 400
    problems = response.json()["detail"]["problems"]
    assert {p["column"] for p in problems} == {"color", "size"}


def test_missing_column_diagnostics(client):
    response = client.post("/api/predict", json={"row": {"color": "red"}})
    assert response.status_code == 400
    problems = response.json()["detail"]["problems"]
    assert any(p["error"] == "missing" for p in problems)


def test_unknown_label_and_method(client):
    r1 = client.post("/api/counterfactuals",
                     json={"row": ROW, "desired_label": "maybe"})
    assert r1.status_code == 400
    r2 = client.post("/api/counterfactuals",
                     json={"row": ROW, "desired_label": "pos",
                           "method": "genetic"})
    assert r2.status_code == 400

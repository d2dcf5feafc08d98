"""HTTP service contracts and CLI/HTTP artifact identity."""

from __future__ import annotations

import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from tmdp import binio
from tmdp.service_cli.api import create_app, dump_openapi
from tmdp.service_cli.pipeline import run_generate, run_simulate


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    root = tmp_path_factory.mktemp("store")
    run_generate(root / "data", preset="tiny", n_plays=120, seed=5, emit_truth_draws=4)
    app = create_app(root, workers=2)
    with TestClient(app) as client:
        yield client, root


def wait_done(client, run_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = client.get(f"/runs/{run_id}").json()
        if doc["status"] in ("done", "failed"):
            return doc
        time.sleep(0.05)
    raise TimeoutError(f"run {run_id} did not finish")


class TestEndpoints:
    def test_health(self, service):
        client, _ = service
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_state_space(self, service):
        client, _ = service
        doc = client.get("/state-space").json()
        assert doc["n_states"] == len(doc["players"]) * len(doc["regions"]) * 2
        assert doc["pressures"] == ["open", "contested"]

    def test_simulate_lifecycle(self, service):
        client, root = service
        r = client.post("/simulate", json={
            "draws": "data", "starts": "data/starts.jsonl", "lapses": "data/lapses.bin",
            "out": "sims_http", "replicates": 2, "seed": 21,
        })
        assert r.status_code == 202
        run_id = r.json()["run_id"]
        doc = wait_done(client, run_id)
        assert doc["status"] == "done", doc
        assert (root / "sims_http" / "rep_0.counts").exists()

    def test_unknown_draws_404_with_code(self, service):
        client, _ = service
        r = client.post("/simulate", json={
            "draws": "missing", "starts": "data/starts.jsonl",
            "lapses": "data/lapses.bin", "out": "x", "replicates": 1, "seed": 1,
        })
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "draws_not_found"

    def test_unknown_run_404(self, service):
        client, _ = service
        r = client.get("/runs/doesnotexist")
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "run_not_found"

    def test_alteration_validate_and_store(self, service):
        client, root = service
        r = client.post("/alterations", json={"rules": [{
            "players": None, "regions": ["mid_range"], "pressure": ["contested"],
            "slices": [1, 2, 3, 4], "kind": "scale_shot_prob", "factor": 0.8,
        }]})
        assert r.status_code == 200
        doc = r.json()
        assert (root / doc["path"]).exists()
        assert doc["targeted_states"] and doc["targeted_states"][0] > 0
        # Content-hash ids: same body, same id.
        r2 = client.post("/alterations", json={"rules": [{
            "players": None, "regions": ["mid_range"], "pressure": ["contested"],
            "slices": [1, 2, 3, 4], "kind": "scale_shot_prob", "factor": 0.8,
        }]})
        assert r2.json()["alteration_id"] == doc["alteration_id"]

    def test_empty_target_rejected(self, service):
        client, _ = service
        r = client.post("/alterations", json={"rules": [{
            "players": ["nobody"], "regions": None, "pressure": None,
            "slices": None, "kind": "scale_shot_prob", "factor": 0.5,
        }]})
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "empty_target"

    def test_compare_workflow_and_report(self, service):
        client, root = service
        alt = client.post("/alterations", json={"rules": [{
            "players": None, "regions": None, "pressure": None,
            "slices": None, "kind": "scale_shot_prob", "factor": 1.0,
        }]}).json()
        r = client.post("/compare", json={
            "draws": "data", "starts": "data/starts.jsonl", "lapses": "data/lapses.bin",
            "replicates": 2, "seed": 33, "alteration_id": alt["alteration_id"],
        })
        assert r.status_code == 202
        run_id = r.json()["run_id"]
        doc = wait_done(client, run_id)
        assert doc["status"] == "done", doc
        report = client.get(f"/reports/{run_id}").json()
        assert report["summary"]["mean_delta_eppp"] == 0.0

    def test_reports_of_unfinished_or_wrong_kind(self, service):
        client, _ = service
        r = client.get("/reports/notarun")
        assert r.status_code == 404

    def test_list_draws(self, service):
        client, _ = service
        doc = client.get("/draws").json()
        tags = {d["model_tag"] for d in doc["draw_sets"]}
        assert {"policy", "transition", "reward"} <= tags


class TestCliHttpParity:
    def test_http_artifact_byte_identical_to_cli(self, service):
        client, root = service
        r = client.post("/simulate", json={
            "draws": "data", "starts": "data/starts.jsonl", "lapses": "data/lapses.bin",
            "out": "sims_parity_http", "replicates": 2, "seed": 77,
        })
        doc = wait_done(client, r.json()["run_id"])
        assert doc["status"] == "done"
        run_simulate(
            root / "data", root / "data" / "starts.jsonl", root / "data" / "lapses.bin",
            root / "sims_parity_cli", replicates=2, seed=77,
        )
        for k in range(2):
            a = (root / "sims_parity_http" / f"rep_{k}.counts").read_bytes()
            b = (root / "sims_parity_cli" / f"rep_{k}.counts").read_bytes()
            assert a == b


class TestOpenApi:
    def test_committed_schema_matches_app(self, tmp_path):
        repo_copy = Path(__file__).resolve().parent.parent / "api" / "openapi.json"
        dump_openapi(tmp_path / "openapi.json")
        assert repo_copy.exists(), "api/openapi.json must be committed"
        assert repo_copy.read_text() == (tmp_path / "openapi.json").read_text()

import asyncio
import inspect

import pytest
from fastapi.testclient import TestClient

import app as api
from core.dataset_io import write_dataset, write_truth


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setattr(api, "INPUT_DIR", tmp_path / "input")
    monkeypatch.setattr(api, "OUTPUT_DIR", tmp_path / "output")
    monkeypatch.setattr(api, "RUN_DIR", tmp_path / "current")
    monkeypatch.setattr(api, "attack_state", {
        "is_running": False, "dataset": None, "encodings": 0, "metrics": {}, "archive": None, "error": None,
    })
    (tmp_path / "output").mkdir()
    return TestClient(api.app)


@pytest.fixture
def uploaded(client, tmp_path, encoded, private_set):
    data = write_dataset(encoded.blind(), tmp_path / "files" / "dataset.ihed")
    truth = write_truth(tmp_path / "files" / "dataset.truth", encoded.ground_truth, encoded.params,
                        originals=private_set.images)
    files = [("files", (p.name, p.read_bytes(), "application/octet-stream")) for p in (data, truth)]
    resp = client.post("/upload", files=files)
    assert resp.status_code == 200
    return resp.json()


def test_health_and_root(client):
    health = client.get("/health").json()
    assert health["status"] == "healthy"
    assert health["dtype"] == "torch.float64"
    assert client.get("/").json()["name"] == "InstaLab API"


def test_idle_status(client):
    assert client.get("/status").json()["status"] == "idle"


def test_upload(uploaded):
    assert uploaded["total_uploaded"] == 2
    assert [f["filename"] for f in uploaded["files"]] == ["dataset.ihed", "dataset.truth"]


def test_attack_on_missing_dataset(client):
    resp = client.post("/attack", json={"dataset": "nothing.ihed"})
    assert resp.status_code == 404


def test_attack_round_trip(client, uploaded, encoded):
    resp = client.post("/attack", json={"dataset": "dataset.ihed", "baseline_only": True})
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "completed"
    assert body["encodings"] == len(encoded)
    assert body["metrics"]["method"] == "baseline"
    assert "assignment_accuracy" in body["metrics"]

    status = client.get("/status").json()
    assert status["status"] == "completed"
    assert status["archive"] == body["archive"]

    content = client.get("/reports/summary/content").json()
    assert content["filename"] == "summary.csv"
    assert {r["metric"] for r in content["rows"]} >= {"encodings", "method"}
    csv = client.get("/reports/assignment")
    assert csv.status_code == 200
    assert csv.text.startswith("encoding_index")

    runs = client.get("/runs").json()
    assert runs["total_runs"] == 1
    run = runs["runs"][0]
    assert run["subcommand"] == "attack"
    assert client.get(f"/runs/{run['run_folder']}").json()["params"]["baseline_only"] == "True"


def test_attack_rejects_bad_parameters(client, uploaded):
    assert client.post("/attack", json={"dataset": "dataset.ihed", "reps": 0}).status_code == 422
    resp = client.post("/attack", json={"dataset": "dataset.ihed", "M": 10_000, "baseline_only": True})
    assert resp.status_code == 500
    assert client.get("/status").json()["status"] == "failed"


def test_busy(client, uploaded):
    api.attack_state["is_running"] = True
    assert client.post("/attack", json={"dataset": "dataset.ihed"}).status_code == 409
    assert client.get("/status").json()["status"] == "running"


def test_attack_runs_off_the_event_loop(client, uploaded, monkeypatch):
    seen = {}
    real_run = api.run_attack

    def spy(*args, **kwargs):
        try:
            asyncio.get_running_loop()
            seen["on_loop"] = True
        except RuntimeError:
            seen["on_loop"] = False
        seen["running"] = api.attack_state["is_running"]
        return real_run(*args, **kwargs)

    monkeypatch.setattr(api, "run_attack", spy)
    resp = client.post("/attack", json={"dataset": "dataset.ihed", "baseline_only": True})
    assert resp.status_code == 200
    assert seen == {"on_loop": False, "running": True}
    assert not inspect.iscoroutinefunction(api.start_attack)
    assert client.get("/status").json()["status"] == "completed"


def test_unknown_report_and_run(client):
    assert client.get("/reports/bogus").status_code == 404
    assert client.get("/reports/summary").status_code == 404
    assert client.get("/runs/no-such-run").status_code == 404
    assert client.get("/runs").json()["total_runs"] == 0


def test_reset(client, uploaded):
    client.post("/attack", json={"dataset": "dataset.ihed", "baseline_only": True})
    assert client.delete("/reset").json() == {"status": "reset"}
    assert client.get("/status").json()["status"] == "idle"
    assert client.post("/attack", json={"dataset": "dataset.ihed"}).status_code == 404

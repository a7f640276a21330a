import time

import pytest

from app import app


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setitem(app.config, "RESULTS_DIR", str(tmp_path))
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


def _wait_for(client, job_id, timeout=120):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/api/experiments/{job_id}").get_json()
        if job["status"] in ("completed", "failed"):
            return job
        time.sleep(0.2)
    pytest.fail(f"job {job_id} did not finish")


def test_health(client):
    reply = client.get("/")
    assert reply.status_code == 200
    assert reply.get_json()["status"] == "online"


def test_oracle_endpoint(client, small_config_text):
    reply = client.post("/api/oracles", json={"config": small_config_text, "model": "Wprime"})
    assert reply.status_code == 200
    body = reply.get_json()
    assert body["model"] == "Wprime"
    assert len(body["x_m"]) == len(body["G"]) == len(body["G_normalized"]) == 256
    # a second identical request is served from the cache
    again = client.post("/api/oracles", json={"config": small_config_text, "model": "Wprime"})
    assert again.get_json()["G"] == body["G"]


def test_oracle_endpoint_accepts_plain_text(client, small_config_text):
    reply = client.post("/api/oracles?model=W", data=small_config_text, content_type="text/plain")
    assert reply.status_code == 200
    assert reply.get_json()["model"] == "W"


def test_oracle_endpoint_rejects_bad_config(client, small_config_text):
    reply = client.post("/api/oracles", json={"config": "n_x = sixty-four\n"})
    assert reply.status_code == 400
    assert "n_x" in reply.get_json()["error"]
    unknown = client.post("/api/oracles", json={"config": small_config_text, "model": "bell"})
    assert unknown.status_code == 400
    nan_point = small_config_text.replace("fixed_point = 0.0", "fixed_point = nan")
    assert client.post("/api/oracles", json={"config": nan_point}).status_code == 400
    assert client.post("/api/experiments", json={"config": nan_point}).status_code == 400


def test_experiment_lifecycle(client, small_config_text, tmp_path):
    reply = client.post("/api/experiments", json={"config": small_config_text})
    assert reply.status_code == 202
    job_id = reply.get_json()["job_id"]
    job = _wait_for(client, job_id)
    assert job["status"] == "completed", job["message"]
    assert (tmp_path / job_id / "correlation.csv").exists()
    assert set(job["files"]) == {"correlation", "manifest"}


def test_experiment_rejects_bad_input(client, small_config_text):
    assert client.post("/api/experiments", json={"config": "pulses = 0\n"}).status_code == 400
    reply = client.post("/api/experiments?backend=spark", json={"config": small_config_text})
    assert reply.status_code == 400


def test_unknown_job_is_404(client):
    assert client.get("/api/experiments/does-not-exist").status_code == 404


def test_celery_tasks_run_in_process(small_config_text):
    from services.correlator import CorrAccumulator
    from tasks import run_oracle_task, simulate_pulse_batch_task

    batch = simulate_pulse_batch_task(small_config_text, 0, 8)
    assert batch["status"] == "success"
    assert CorrAccumulator.from_dict(batch["accumulator"]).count == 8
    oracle = run_oracle_task(small_config_text, "W")
    assert oracle["status"] == "success"
    assert len(oracle["G"]) == 256
    assert run_oracle_task("pulses = 0\n")["status"] == "error"

import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from surgeplan import io
from surgeplan.service.app import create_app

from helpers import simple_scenario, two_hospital_transfer_fixture


@pytest.fixture
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "data")
    with TestClient(app) as c:
        yield c


def scenario_doc():
    return io.scenario_to_dict(two_hospital_transfer_fixture())


def wait_for_job(client, job_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/api/jobs/{job_id}").json()
        if state["state"] in ("done", "failed"):
            return state
        time.sleep(0.05)
    raise TimeoutError("job did not finish")


def test_health_and_spec(client):
    health = client.get("/api/health")
    assert health.status_code == 200
    assert health.json()["status"] == "ok"
    spec = client.get("/api/spec")
    assert spec.status_code == 200
    assert "/api/scenarios/{sid}/solve" in spec.json()["paths"]


def test_scenario_crud_and_versioning(client):
    created = client.post("/api/scenarios", json=scenario_doc())
    assert created.status_code == 201
    sid = created.json()["id"]

    got = client.get(f"/api/scenarios/{sid}")
    assert got.status_code == 200
    assert got.json()["version"] == 1
    assert got.json()["scenario"]["name"] == "TF-1"

    doc = scenario_doc()
    doc["name"] = "TF-1b"
    updated = client.put(f"/api/scenarios/{sid}", json=doc)
    assert updated.status_code == 200
    assert updated.json()["version"] == 2

    assert client.get("/api/scenarios/does-not-exist").status_code == 404
    assert client.get("/api/scenarios").status_code == 200


def test_invalid_scenario_gets_422_with_codes(client):
    doc = scenario_doc()
    doc["units"][0]["hospital"] = "H9"
    res = client.post("/api/scenarios", json=doc)
    assert res.status_code == 422
    codes = {v["code"] for v in res.json()["detail"]}
    assert "UnknownHospitalRef" in codes


def test_solve_job_and_run_payload(client):
    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    job = client.post(f"/api/scenarios/{sid}/solve", json={"options": {}})
    assert job.status_code == 202
    state = wait_for_job(client, job.json()["job_id"])
    assert state["state"] == "done", state
    run = client.get(f"/api/runs/{state['run_id']}")
    assert run.status_code == 200
    doc = run.json()
    assert doc["plan"]["status"] == "optimal"
    assert "plots" in doc and "gantt" in doc["plots"]


def test_solve_with_option_overrides(client):
    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    job = client.post(f"/api/scenarios/{sid}/solve",
                      json={"options": {"transfer_limits": {"total": 0}}})
    state = wait_for_job(client, job.json()["job_id"])
    run = client.get(f"/api/runs/{state['run_id']}").json()
    assert run["plan"]["metrics"]["transfers_used"] == 0


def test_bad_override_gets_422(client):
    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    res = client.post(f"/api/scenarios/{sid}/solve",
                      json={"options": {"gamma2": 0.2}})
    assert res.status_code == 422


def test_infeasible_solve_fails_with_code(client):
    doc = io.scenario_to_dict(simple_scenario(census=(9.0, 0.0, 0.0), beds=5))
    sid = client.post("/api/scenarios", json=doc).json()["id"]
    job = client.post(f"/api/scenarios/{sid}/solve", json={"options": {}})
    state = wait_for_job(client, job.json()["job_id"])
    assert state["state"] == "failed"
    assert state["error_code"] == "infeasible"


def test_sweep_job_produces_monotone_curve(client):
    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    job = client.post(f"/api/scenarios/{sid}/sweep",
                      json={"s_values": [0, 2, 4], "point_time_limit": 30})
    assert job.status_code == 202
    state = wait_for_job(client, job.json()["job_id"])
    assert state["state"] == "done", state
    run = client.get(f"/api/runs/{state['run_id']}").json()
    points = run["pareto"]["points"]
    values = [p["surge_bed_days"] for p in points]
    assert values == sorted(values, reverse=True)


def test_sweep_without_transfers_enabled_gets_422(client):
    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    res = client.post(f"/api/scenarios/{sid}/sweep",
                      json={"s_values": [0, 2], "options": {"allow_transfers": False}})
    assert res.status_code == 422
    assert res.json()["detail"][0]["code"] == "TransfersDisabled"


def test_transfer_budget_pareto_property_via_api(client):
    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    surge = {}
    for cap in (0, 8):
        job = client.post(f"/api/scenarios/{sid}/solve",
                          json={"options": {"transfer_limits": {"total": cap}}})
        state = wait_for_job(client, job.json()["job_id"])
        run = client.get(f"/api/runs/{state['run_id']}").json()
        surge[cap] = run["plan"]["metrics"]["surge_bed_days"]
    assert surge[8] <= surge[0] + 1e-9


def test_job_snapshot_is_immutable(client):
    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    original_hash = client.get(f"/api/scenarios/{sid}").json()["scenario_hash"]
    job = client.post(f"/api/scenarios/{sid}/solve", json={"options": {}})
    doc = scenario_doc()
    doc["demand"]["A"]["arrivals"] = [0.0, 0.0, 0.0, 0.0]
    client.put(f"/api/scenarios/{sid}", json=doc)
    state = wait_for_job(client, job.json()["job_id"])
    run = client.get(f"/api/runs/{state['run_id']}").json()
    assert run["provenance"]["scenario_hash"] == original_hash


def test_unknown_job_and_run_404(client):
    assert client.get("/api/jobs/nope").status_code == 404
    assert client.get("/api/runs/nope").status_code == 404


def test_job_limit_409(tmp_path):
    app = create_app(data_dir=tmp_path / "data", max_active_jobs=0)
    with TestClient(app) as client:
        sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
        res = client.post(f"/api/scenarios/{sid}/solve", json={"options": {}})
        assert res.status_code == 409


def test_cli_and_api_results_are_byte_identical(client, tmp_path):
    from click.testing import CliRunner

    from surgeplan.cli import main

    scenario_path = tmp_path / "scenario.json"
    io.save_scenario(scenario_path, two_hospital_transfer_fixture())
    runner = CliRunner()
    result = runner.invoke(main, ["solve", str(scenario_path), "--out", str(tmp_path / "runs")])
    assert result.exit_code == 0, result.output
    cli_run_dir = Path(json.loads(result.output)["run_dir"])
    cli_bytes = (cli_run_dir / "plan.json").read_bytes()

    sid = client.post("/api/scenarios", json=scenario_doc()).json()["id"]
    job = client.post(f"/api/scenarios/{sid}/solve", json={"options": {}})
    state = wait_for_job(client, job.json()["job_id"])
    runs_dir = client.app.state.runs_dir
    api_bytes = (runs_dir / state["run_id"] / "plan.json").read_bytes()
    assert cli_bytes == api_bytes

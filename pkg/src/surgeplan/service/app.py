"""HTTP planning service: scenario management, solve/sweep/compare jobs, run retrieval."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from surgeplan import __version__, analysis, io, solver
from surgeplan.domain import ScenarioInstance
from surgeplan.model import NoSolution, solve_scenario
from surgeplan.service import schemas
from surgeplan.service.jobs import JobLimitReached, JobRegistry


class ScenarioStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._items: dict[str, tuple[ScenarioInstance, int]] = {}

    def create(self, scenario: ScenarioInstance) -> str:
        with self._lock:
            sid = io.new_ulid()
            self._items[sid] = (scenario, 1)
            return sid

    def get(self, sid: str) -> Optional[tuple[ScenarioInstance, int]]:
        with self._lock:
            return self._items.get(sid)

    def update(self, sid: str, scenario: ScenarioInstance) -> Optional[int]:
        with self._lock:
            if sid not in self._items:
                return None
            version = self._items[sid][1] + 1
            self._items[sid] = (scenario, version)
            return version

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._items)


def _parse_or_422(doc: dict) -> ScenarioInstance:
    scenario, violations = io.parse_scenario(doc)
    if violations:
        raise HTTPException(status_code=422, detail=[v.as_dict() for v in violations])
    return scenario


def _merge_options(scenario: ScenarioInstance, overrides: dict) -> ScenarioInstance:
    if not overrides:
        return scenario
    doc = io.scenario_to_dict(scenario)
    doc["options"].update(overrides)
    return _parse_or_422(doc)


def create_app(data_dir: str = "surgeplan-data", max_workers: int = 2,
               max_active_jobs: int = 8, frontend_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="surgeplan service", version=__version__,
                  openapi_url="/api/openapi.json", docs_url="/api/docs")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    data_path = Path(data_dir)
    runs_dir = data_path / "runs"
    store = ScenarioStore()
    registry = JobRegistry(max_workers=max_workers, max_active=max_active_jobs)
    app.state.store = store
    app.state.registry = registry
    app.state.runs_dir = runs_dir

    @app.get("/api/health", response_model=schemas.HealthOut)
    def health():
        return schemas.HealthOut(status="ok", version=__version__,
                                 solver_backend=solver.resolve_backend(),
                                 active_jobs=registry.active_count())

    @app.get("/api/spec")
    def openapi_spec():
        return JSONResponse(app.openapi())

    @app.post("/api/scenarios", response_model=schemas.ScenarioCreated, status_code=201)
    def create_scenario(doc: dict):
        scenario = _parse_or_422(doc)
        sid = store.create(scenario)
        return schemas.ScenarioCreated(id=sid, scenario_hash=io.scenario_hash(scenario), version=1)

    @app.get("/api/scenarios")
    def list_scenarios():
        out = []
        for sid in store.ids():
            scenario, version = store.get(sid)
            out.append({"id": sid, "version": version, "name": scenario.name,
                        "hospitals": len(scenario.hospitals), "horizon": scenario.horizon})
        return out

    @app.get("/api/scenarios/{sid}", response_model=schemas.ScenarioOut)
    def get_scenario(sid: str):
        item = store.get(sid)
        if item is None:
            raise HTTPException(status_code=404, detail="unknown scenario id")
        scenario, version = item
        return schemas.ScenarioOut(id=sid, version=version,
                                   scenario_hash=io.scenario_hash(scenario),
                                   scenario=io.scenario_to_dict(scenario))

    @app.put("/api/scenarios/{sid}", response_model=schemas.ScenarioCreated)
    def update_scenario(sid: str, doc: dict):
        if store.get(sid) is None:
            raise HTTPException(status_code=404, detail="unknown scenario id")
        scenario = _parse_or_422(doc)
        version = store.update(sid, scenario)
        return schemas.ScenarioCreated(id=sid, scenario_hash=io.scenario_hash(scenario),
                                       version=version)

    def _snapshot_or_404(sid: str, overrides: dict) -> ScenarioInstance:
        item = store.get(sid)
        if item is None:
            raise HTTPException(status_code=404, detail="unknown scenario id")
        return _merge_options(item[0], overrides)

    def _submit(kind: str, work) -> schemas.JobCreated:
        try:
            job_id = registry.submit(kind, work)
        except JobLimitReached as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return schemas.JobCreated(job_id=job_id)

    @app.post("/api/scenarios/{sid}/solve", response_model=schemas.JobCreated, status_code=202)
    def solve_endpoint(sid: str, body: schemas.SolveRequest):
        scenario = _snapshot_or_404(sid, body.options)

        def work(progress):
            progress(0.1)
            try:
                plan = solve_scenario(scenario)
            except NoSolution as exc:
                return None, exc.status
            payloads = analysis.plan_plot_payloads(scenario, plan)
            plots = {f"{name}.csv": analysis.payload_to_csv(p) for name, p in payloads.items()}
            run_id, run_dir = io.save_run(runs_dir, scenario, plan, kind="solve", plots=plots)
            io.atomic_write_text(Path(run_dir) / "payload.json", io.canonical_json(payloads))
            return run_id, None

        return _submit("solve", work)

    @app.post("/api/scenarios/{sid}/sweep", response_model=schemas.JobCreated, status_code=202)
    def sweep_endpoint(sid: str, body: schemas.SweepRequest):
        scenario = _snapshot_or_404(sid, dict(body.options))
        if not scenario.options.allow_transfers:
            raise HTTPException(status_code=422, detail=[
                {"code": "TransfersDisabled",
                 "message": "a transfer sweep requires allow_transfers (set it in the scenario or the override)",
                 "path": "options.allow_transfers"}])
        if not body.s_values:
            raise HTTPException(status_code=422, detail=[
                {"code": "MissingField", "message": "s_values must be non-empty", "path": "s_values"}])

        def work(progress):
            progress(0.05)
            curve = analysis.pareto_sweep(scenario, body.s_values,
                                          point_time_limit=body.point_time_limit)
            payload = analysis.pareto_payload(curve)
            if not curve.plans:
                return None, "infeasible"
            last_plan = curve.plans[max(curve.plans)]
            run_id, run_dir = io.save_run(
                runs_dir, scenario, last_plan, kind="sweep",
                extra_payload={"pareto": payload},
                plots={"pareto.csv": analysis.payload_to_csv(payload)})
            io.atomic_write_text(Path(run_dir) / "payload.json",
                                 io.canonical_json({"pareto": payload}))
            return run_id, None

        return _submit("sweep", work)

    @app.post("/api/scenarios/{sid}/compare", response_model=schemas.JobCreated, status_code=202)
    def compare_endpoint(sid: str, body: schemas.CompareRequest):
        scenario = _snapshot_or_404(sid, body.options)

        def work(progress):
            progress(0.1)
            results = analysis.compare_strategies(scenario, time_limit=body.time_limit)
            payload = analysis.strategy_payload(results)
            plans = [r.plan for r in results if r.plan is not None]
            if not plans:
                return None, "infeasible"
            run_id, run_dir = io.save_run(
                runs_dir, scenario, plans[0], kind="compare",
                extra_payload={"comparison": payload},
                plots={"strategies.csv": analysis.payload_to_csv(payload)})
            io.atomic_write_text(Path(run_dir) / "payload.json",
                                 io.canonical_json({"comparison": payload}))
            return run_id, None

        return _submit("compare", work)

    @app.get("/api/jobs/{job_id}", response_model=schemas.JobStateOut)
    def job_state(job_id: str):
        job = registry.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job id")
        return schemas.JobStateOut(**vars(job))

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        run_path = runs_dir / run_id
        plan_file = run_path / "plan.json"
        if not plan_file.exists():
            raise HTTPException(status_code=404, detail="unknown run id")
        doc = json.loads(plan_file.read_text())
        payload_file = run_path / "payload.json"
        if payload_file.exists():
            doc["plots"] = json.loads(payload_file.read_text())
        return doc

    @app.get("/api/runs/{run_id}/plan.json")
    def get_run_plan_bytes(run_id: str):
        plan_file = runs_dir / run_id / "plan.json"
        if not plan_file.exists():
            raise HTTPException(status_code=404, detail="unknown run id")
        return JSONResponse(json.loads(plan_file.read_text()))

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app

"""Pydantic request/response models for the planning service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ViolationOut(BaseModel):
    code: str
    message: str
    path: str = ""


class ScenarioCreated(BaseModel):
    id: str
    scenario_hash: str
    version: int = 1


class ScenarioOut(BaseModel):
    id: str
    version: int
    scenario_hash: str
    scenario: dict


class SolveRequest(BaseModel):
    """Partial overrides merged into the scenario's stored options."""

    options: dict[str, Any] = Field(default_factory=dict)


class SweepRequest(BaseModel):
    s_values: list[int]
    options: dict[str, Any] = Field(default_factory=dict)
    point_time_limit: Optional[float] = 90.0


class CompareRequest(BaseModel):
    options: dict[str, Any] = Field(default_factory=dict)
    time_limit: Optional[float] = 120.0


class JobCreated(BaseModel):
    job_id: str


class JobStateOut(BaseModel):
    job_id: str
    kind: str
    state: str  # queued | running | done | failed
    progress: float = 0.0
    run_id: Optional[str] = None
    error_code: Optional[str] = None
    error: Optional[str] = None


class HealthOut(BaseModel):
    status: str
    version: str
    solver_backend: str
    active_jobs: int

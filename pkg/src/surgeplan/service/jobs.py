"""Job registry with a bounded worker pool for long-running solves."""

from __future__ import annotations

import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

from surgeplan.io import new_ulid


class JobLimitReached(RuntimeError):
    pass


@dataclass
class JobState:
    job_id: str
    kind: str
    state: str = "queued"  # queued | running | done | failed (forward-only)
    progress: float = 0.0
    run_id: Optional[str] = None
    error_code: Optional[str] = None
    error: Optional[str] = None


_ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2}


class JobRegistry:
    """Single-writer registry; reads return snapshots."""

    def __init__(self, max_workers: int = 2, max_active: int = 8):
        self._lock = threading.Lock()
        self._jobs: dict[str, JobState] = {}
        self._pool = ThreadPoolExecutor(max_workers=max_workers)
        self._max_active = max_active

    def active_count(self) -> int:
        with self._lock:
            return sum(1 for j in self._jobs.values() if j.state in ("queued", "running"))

    def submit(self, kind: str, work: Callable[[Callable[[float], None]], tuple[str, Optional[str]]]) -> str:
        """work(progress_cb) -> (run_id, None) or raises; returns the new job id."""
        with self._lock:
            active = sum(1 for j in self._jobs.values() if j.state in ("queued", "running"))
            if active >= self._max_active:
                raise JobLimitReached(f"too many active jobs ({active})")
            job_id = new_ulid()
            self._jobs[job_id] = JobState(job_id=job_id, kind=kind)

        def runner():
            self._transition(job_id, "running")

            def progress(fraction: float) -> None:
                with self._lock:
                    job = self._jobs[job_id]
                    if job.state == "running":
                        job.progress = min(1.0, max(job.progress, fraction))

            try:
                run_id, error_code = work(progress)
            except Exception as exc:  # noqa: BLE001 - job boundary
                with self._lock:
                    job = self._jobs[job_id]
                    job.state = "failed"
                    job.error = str(exc) or traceback.format_exc(limit=1)
                    job.error_code = getattr(exc, "status", None) or type(exc).__name__
                return
            with self._lock:
                job = self._jobs[job_id]
                if error_code:
                    job.state = "failed"
                    job.error_code = error_code
                    job.error = error_code
                else:
                    job.state = "done"
                    job.progress = 1.0
                    job.run_id = run_id

        self._pool.submit(runner)
        return job_id

    def _transition(self, job_id: str, state: str) -> None:
        with self._lock:
            job = self._jobs[job_id]
            if _ORDER[state] >= _ORDER[job.state]:
                job.state = state

    def get(self, job_id: str) -> Optional[JobState]:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                return None
            return JobState(**vars(job))

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)

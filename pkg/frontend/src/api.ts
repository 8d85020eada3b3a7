/** Thin JSON client for the planning service, with job polling. */

import { JobState, RunDocument, SolveOptionsWire } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(`API error ${status}`);
  }
}

export class ApiClient {
  constructor(private base = "", private fetchFn: FetchLike = fetch.bind(globalThis)) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json().catch(() => null);
    if (!res.ok) {
      throw new ApiError(res.status, (payload as { detail?: unknown })?.detail ?? payload);
    }
    return payload as T;
  }

  health() {
    return this.request<{ status: string; version: string }>("GET", "/api/health");
  }

  createScenario(doc: unknown) {
    return this.request<{ id: string; scenario_hash: string }>("POST", "/api/scenarios", doc);
  }

  getScenario(id: string) {
    return this.request<{ id: string; version: number; scenario: Record<string, unknown> }>(
      "GET", `/api/scenarios/${id}`);
  }

  updateScenario(id: string, doc: unknown) {
    return this.request<{ id: string; version: number }>("PUT", `/api/scenarios/${id}`, doc);
  }

  listScenarios() {
    return this.request<{ id: string; name: string }[]>("GET", "/api/scenarios");
  }

  solve(id: string, options: Partial<SolveOptionsWire>) {
    return this.request<{ job_id: string }>("POST", `/api/scenarios/${id}/solve`, { options });
  }

  sweep(id: string, sValues: number[], options: Partial<SolveOptionsWire> = {}, pointTimeLimit = 60) {
    return this.request<{ job_id: string }>("POST", `/api/scenarios/${id}/sweep`, {
      s_values: sValues, options, point_time_limit: pointTimeLimit,
    });
  }

  compare(id: string, options: Partial<SolveOptionsWire> = {}, timeLimit = 60) {
    return this.request<{ job_id: string }>("POST", `/api/scenarios/${id}/compare`, {
      options, time_limit: timeLimit,
    });
  }

  job(jobId: string) {
    return this.request<JobState>("GET", `/api/jobs/${jobId}`);
  }

  run(runId: string) {
    return this.request<RunDocument>("GET", `/api/runs/${runId}`);
  }
}

export interface PollHooks {
  intervalMs?: number;
  timeoutMs?: number;
  onProgress?: (state: JobState) => void;
  sleep?: (ms: number) => Promise<void>;
}

/** Poll a job until done/failed; resolves with the terminal state. */
export async function pollJob(client: ApiClient, jobId: string, hooks: PollHooks = {}): Promise<JobState> {
  const interval = hooks.intervalMs ?? 500;
  const timeout = hooks.timeoutMs ?? 30 * 60 * 1000;
  const sleep = hooks.sleep ?? ((ms: number) => new Promise((r) => setTimeout(r, ms)));
  const deadline = Date.now() + timeout;
  for (;;) {
    const state = await client.job(jobId);
    hooks.onProgress?.(state);
    if (state.state === "done" || state.state === "failed") return state;
    if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
    await sleep(interval);
  }
}

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, pollJob } from "../src/api.js";
import type { JobState } from "../src/types.js";

function fakeFetch(routes: Record<string, () => { status: number; body: unknown }>) {
  const calls: string[] = [];
  const fn = async (url: string, init?: RequestInit) => {
    const key = `${init?.method ?? "GET"} ${url}`;
    calls.push(key);
    const handler = routes[key];
    if (!handler) throw new Error(`no route for ${key}`);
    const { status, body } = handler();
    return { ok: status < 400, status, json: async () => body };
  };
  return { fn, calls };
}

describe("api client", () => {
  it("performs JSON round trips", async () => {
    const { fn } = fakeFetch({
      "GET /api/health": () => ({ status: 200, body: { status: "ok", version: "0.1.0" } }),
    });
    const client = new ApiClient("", fn);
    expect((await client.health()).status).toBe("ok");
  });

  it("throws ApiError with the violation detail on 422", async () => {
    const { fn } = fakeFetch({
      "POST /api/scenarios": () => ({ status: 422, body: { detail: [{ code: "NoHospitals" }] } }),
    });
    const client = new ApiClient("", fn);
    await expect(client.createScenario({})).rejects.toThrowError(ApiError);
  });
});

describe("job polling", () => {
  it("resolves once the job reaches a terminal state", async () => {
    const states: JobState[] = [
      { job_id: "j", kind: "solve", state: "queued", progress: 0, run_id: null, error_code: null, error: null },
      { job_id: "j", kind: "solve", state: "running", progress: 0.4, run_id: null, error_code: null, error: null },
      { job_id: "j", kind: "solve", state: "done", progress: 1, run_id: "r1", error_code: null, error: null },
    ];
    let i = 0;
    const { fn } = fakeFetch({
      "GET /api/jobs/j": () => ({ status: 200, body: states[Math.min(i++, states.length - 1)] }),
    });
    const client = new ApiClient("", fn);
    const seen: number[] = [];
    const done = await pollJob(client, "j", {
      intervalMs: 0,
      sleep: async () => {},
      onProgress: (s) => seen.push(s.progress),
    });
    expect(done.state).toBe("done");
    expect(done.run_id).toBe("r1");
    expect(seen).toEqual([0, 0.4, 1]);
  });

  it("surfaces failed jobs to the caller", async () => {
    const { fn } = fakeFetch({
      "GET /api/jobs/j": () => ({
        status: 200,
        body: { job_id: "j", kind: "solve", state: "failed", progress: 0, run_id: null, error_code: "infeasible", error: "infeasible" },
      }),
    });
    const done = await pollJob(new ApiClient("", fn), "j", { sleep: async () => {} });
    expect(done.state).toBe("failed");
    expect(done.error_code).toBe("infeasible");
  });
});

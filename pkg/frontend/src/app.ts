/**
 * Planner single-page app: scenario editor, plan explorer, trade-off explorer,
 * and run comparison. All optimization happens server-side; this file only
 * wires DOM events to the API client and the pure chart renderers.
 */

import { ApiClient, ApiError, pollJob } from "./api.js";
import { renderPayload } from "./charts/charts.js";
import { parseSeriesCsv, seriesByHospital } from "./csv.js";
import { knobsToOptions, optionsToKnobs, sanitizeKnobs } from "./knobs.js";
import {
  addParetoPoint, diffPlans, initialState, paretoPayloadFromPoints, runLabel,
} from "./state.js";
import { RunDocument } from "./types.js";

const api = new ApiClient("");
const state = initialState();
const runCache = new Map<string, RunDocument>();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, kind: "info" | "error" = "info"): void {
  const bar = el<HTMLDivElement>("status");
  bar.textContent = text;
  bar.className = `status ${kind}`;
}

function showError(err: unknown): void {
  if (err instanceof ApiError) {
    const detail = Array.isArray(err.detail)
      ? err.detail.map((v) => (v as { code?: string; message?: string }).message ?? JSON.stringify(v)).join("; ")
      : JSON.stringify(err.detail);
    setStatus(`API ${err.status}: ${detail} (retry after fixing inputs)`, "error");
  } else {
    setStatus(`${err} — check the service and retry`, "error");
  }
}

// --- scenario editor ---------------------------------------------------------

function scenarioDocFromEditor(): Record<string, unknown> {
  return JSON.parse(el<HTMLTextAreaElement>("scenario-json").value);
}

async function loadScenarioIntoEditor(id: string): Promise<void> {
  const res = await api.getScenario(id);
  state.scenarioId = id;
  el<HTMLTextAreaElement>("scenario-json").value = JSON.stringify(res.scenario, null, 2);
  const options = (res.scenario as { options?: Record<string, unknown> }).options ?? {};
  applyKnobs(optionsToKnobs(options));
  el<HTMLSpanElement>("scenario-label").textContent = `${id} (v${res.version})`;
  setStatus(`loaded scenario ${id}`);
}

async function saveScenario(): Promise<void> {
  const doc = scenarioDocFromEditor();
  try {
    if (state.scenarioId) {
      await api.updateScenario(state.scenarioId, doc);
      await loadScenarioIntoEditor(state.scenarioId);
    } else {
      const created = await api.createScenario(doc);
      await loadScenarioIntoEditor(created.id);
    }
    el<HTMLDivElement>("validation").textContent = "";
  } catch (err) {
    if (err instanceof ApiError && err.status === 422 && Array.isArray(err.detail)) {
      el<HTMLDivElement>("validation").innerHTML = (err.detail as { code: string; message: string; path: string }[])
        .map((v) => `<div class="violation"><code>${v.code}</code> ${v.message} <em>${v.path}</em></div>`)
        .join("");
      setStatus("scenario has validation problems", "error");
    } else {
      showError(err);
    }
  }
}

function wireCsvDrop(): void {
  const zone = el<HTMLDivElement>("csv-drop");
  zone.addEventListener("dragover", (ev) => ev.preventDefault());
  zone.addEventListener("drop", async (ev) => {
    ev.preventDefault();
    const file = ev.dataTransfer?.files?.[0];
    if (!file) return;
    try {
      const rows = parseSeriesCsv(await file.text());
      const series = seriesByHospital(rows);
      const doc = scenarioDocFromEditor() as { demand?: Record<string, Record<string, unknown>> };
      doc.demand = doc.demand ?? {};
      for (const [hid, data] of Object.entries(series)) {
        const entry = doc.demand[hid] ?? { kind: "census_series" };
        if (entry.kind === "arrivals_series" && data.admissions.length) {
          entry.arrivals = data.admissions;
        } else if (data.census.length) {
          entry.kind = "census_series";
          entry.census = data.census;
        }
        doc.demand[hid] = entry;
      }
      el<HTMLTextAreaElement>("scenario-json").value = JSON.stringify(doc, null, 2);
      setStatus(`merged series for ${Object.keys(series).length} hospitals from ${file.name}`);
    } catch (err) {
      showError(err);
    }
  });
}

// --- knobs -------------------------------------------------------------------

function readKnobs() {
  const num = (id: string): number => Number(el<HTMLInputElement>(id).value);
  const opt = (id: string): number | null => {
    const raw = el<HTMLInputElement>(id).value;
    return raw === "" ? null : Number(raw);
  };
  return sanitizeKnobs({
    allowTransfers: el<HTMLInputElement>("knob-transfers").checked,
    maxTransfers: el<HTMLInputElement>("knob-transfers").checked ? num("knob-max-transfers") : null,
    robust: el<HTMLInputElement>("knob-robust").checked,
    gamma1: num("knob-gamma1"),
    gamma2: opt("knob-gamma2"),
    occupancyCap: opt("knob-occupancy"),
    headroom: opt("knob-headroom"),
    unitOrder: el<HTMLInputElement>("knob-unit-order").checked,
    seed: num("knob-seed"),
  });
}

function applyKnobs(knobs: ReturnType<typeof readKnobs>): void {
  state.knobs = knobs;
  el<HTMLInputElement>("knob-transfers").checked = knobs.allowTransfers;
  el<HTMLInputElement>("knob-max-transfers").value = String(knobs.maxTransfers ?? 0);
  el<HTMLInputElement>("knob-robust").checked = knobs.robust;
  el<HTMLInputElement>("knob-gamma1").value = String(knobs.gamma1);
  el<HTMLInputElement>("knob-gamma2").value = knobs.gamma2 === null ? "" : String(knobs.gamma2);
  el<HTMLInputElement>("knob-occupancy").value = knobs.occupancyCap === null ? "" : String(knobs.occupancyCap);
  el<HTMLInputElement>("knob-headroom").value = knobs.headroom === null ? "" : String(knobs.headroom);
  el<HTMLInputElement>("knob-unit-order").checked = knobs.unitOrder;
  el<HTMLInputElement>("knob-seed").value = String(knobs.seed);
  el<HTMLSpanElement>("knob-max-transfers-value").textContent = String(knobs.maxTransfers ?? "off");
}

// --- runs ---------------------------------------------------------------------

async function fetchRun(runId: string): Promise<RunDocument> {
  const cached = runCache.get(runId);
  if (cached) return cached;
  const doc = await api.run(runId);
  runCache.set(runId, doc);
  return doc;
}

function registerRun(runId: string, doc: RunDocument): void {
  if (!state.runs.some((r) => r.run_id === runId)) {
    state.runs.push({ run_id: runId, label: runLabel(doc, runId) });
  }
  for (const selectId of ["compare-a", "compare-b"]) {
    const select = el<HTMLSelectElement>(selectId);
    select.innerHTML = state.runs
      .map((r) => `<option value="${r.run_id}">${r.label}</option>`)
      .join("");
  }
}

function renderPlanExplorer(doc: RunDocument): void {
  const container = el<HTMLDivElement>("plan-charts");
  const plots = doc.plots ?? {};
  container.innerHTML = Object.values(plots).map((p) => renderPayload(p)).join("");
  const m = doc.plan.metrics;
  el<HTMLDivElement>("plan-summary").textContent =
    `${doc.plan.status}: objective ${doc.plan.objective.toFixed(2)}, ` +
    `${m.bed_days} bed-days (${m.surge_bed_days} surge), ${m.transfers_used} transfers`;
}

async function runSolve(): Promise<void> {
  if (!state.scenarioId) {
    setStatus("create or load a scenario first", "error");
    return;
  }
  const knobs = readKnobs();
  applyKnobs(knobs);
  try {
    const job = await api.solve(state.scenarioId, knobsToOptions(knobs));
    setStatus("solving…");
    const progress = el<HTMLProgressElement>("job-progress");
    const done = await pollJob(api, job.job_id, {
      onProgress: (s) => { progress.value = s.progress; },
    });
    if (done.state === "failed" || !done.run_id) {
      setStatus(`solve failed: ${done.error_code ?? done.error}`, "error");
      return;
    }
    const doc = await fetchRun(done.run_id);
    registerRun(done.run_id, doc);
    renderPlanExplorer(doc);
    if (knobs.allowTransfers && knobs.maxTransfers !== null) {
      const { points, consistent } = addParetoPoint(state.paretoPoints, {
        max_transfers: knobs.maxTransfers,
        surge_bed_days: doc.plan.metrics.surge_bed_days,
        transfers_used: doc.plan.metrics.transfers_used,
        run_id: done.run_id,
      });
      state.paretoPoints = points;
      renderTradeoff();
      if (!consistent) {
        setStatus("warning: new point is above the existing curve (looser solve?)", "error");
        return;
      }
    }
    setStatus(`run ${done.run_id} done`);
  } catch (err) {
    showError(err);
  }
}

function renderTradeoff(): void {
  const container = el<HTMLDivElement>("pareto-chart");
  container.innerHTML = renderPayload(paretoPayloadFromPoints(state.paretoPoints));
  container.querySelectorAll<SVGCircleElement>(".pareto-point").forEach((node) => {
    node.addEventListener("click", async () => {
      const s = Number(node.dataset.maxTransfers);
      const entry = state.paretoPoints.find((p) => p.max_transfers === s);
      if (entry?.run_id) {
        renderPlanExplorer(await fetchRun(entry.run_id));
        setStatus(`showing plan behind S=${s}`);
      }
    });
  });
}

async function runSweep(): Promise<void> {
  if (!state.scenarioId) return;
  const values = el<HTMLInputElement>("sweep-values").value
    .split(",").map((v) => Number(v.trim())).filter((v) => Number.isFinite(v) && v >= 0);
  if (!values.length) {
    setStatus("enter sweep budgets like 0,8,16", "error");
    return;
  }
  try {
    // a sweep is inherently a transfer study; enable transfers regardless of the toggle
    const options = { ...knobsToOptions(readKnobs()), allow_transfers: true };
    const job = await api.sweep(state.scenarioId, values, options);
    setStatus("sweeping…");
    const done = await pollJob(api, job.job_id, {
      onProgress: (s) => { el<HTMLProgressElement>("job-progress").value = s.progress; },
    });
    if (done.state === "failed" || !done.run_id) {
      setStatus(`sweep failed: ${done.error_code ?? done.error}`, "error");
      return;
    }
    const doc = await fetchRun(done.run_id);
    if (doc.pareto) {
      for (const p of doc.pareto.points) {
        state.paretoPoints = addParetoPoint(state.paretoPoints, {
          max_transfers: p.max_transfers,
          surge_bed_days: p.surge_bed_days,
          transfers_used: p.transfers_used,
          run_id: null,
        }).points;
      }
      renderTradeoff();
    }
    setStatus("sweep done");
  } catch (err) {
    showError(err);
  }
}

async function runCompare(): Promise<void> {
  if (!state.scenarioId) return;
  try {
    const job = await api.compare(state.scenarioId, knobsToOptions(readKnobs()));
    setStatus("comparing strategies…");
    const done = await pollJob(api, job.job_id, {
      onProgress: (s) => { el<HTMLProgressElement>("job-progress").value = s.progress; },
    });
    if (done.state === "failed" || !done.run_id) {
      setStatus(`comparison failed: ${done.error_code ?? done.error}`, "error");
      return;
    }
    const doc = await fetchRun(done.run_id);
    if (doc.comparison) {
      el<HTMLDivElement>("strategy-chart").innerHTML = renderPayload(doc.comparison);
    }
    setStatus("strategy comparison done");
  } catch (err) {
    showError(err);
  }
}

async function renderComparison(): Promise<void> {
  const [aId, bId] = [el<HTMLSelectElement>("compare-a").value, el<HTMLSelectElement>("compare-b").value];
  if (!aId || !bId) return;
  const [a, b] = await Promise.all([fetchRun(aId), fetchRun(bId)]);
  const diff = diffPlans(a.plan, b.plan);
  const rows = diff.metrics
    .map((m) => `<tr><td>${m.name}</td><td>${m.a}</td><td>${m.b}</td></tr>`)
    .join("");
  const allocRows = diff.allocations
    .map((d) => `<tr><td>${d.unit}</td><td>${d.only_in_a.join(",") || "–"}</td><td>${d.only_in_b.join(",") || "–"}</td></tr>`)
    .join("");
  const transferRows = diff.transfers
    .map((t) => `<tr><td>${t.key}</td><td>${t.a}</td><td>${t.b}</td></tr>`)
    .join("");
  el<HTMLDivElement>("comparison-output").innerHTML = `
    <table><thead><tr><th>metric</th><th>A</th><th>B</th></tr></thead><tbody>${rows}</tbody></table>
    <h4>allocation differences (days active only in A / only in B)</h4>
    <table><thead><tr><th>unit</th><th>A only</th><th>B only</th></tr></thead><tbody>${allocRows || "<tr><td colspan=3>identical</td></tr>"}</tbody></table>
    <h4>transfer differences</h4>
    <table><thead><tr><th>lane@day</th><th>A</th><th>B</th></tr></thead><tbody>${transferRows || "<tr><td colspan=3>identical</td></tr>"}</tbody></table>`;
}

export function boot(): void {
  el<HTMLButtonElement>("save-scenario").addEventListener("click", () => void saveScenario());
  el<HTMLButtonElement>("solve").addEventListener("click", () => void runSolve());
  el<HTMLButtonElement>("sweep").addEventListener("click", () => void runSweep());
  el<HTMLButtonElement>("compare-strategies").addEventListener("click", () => void runCompare());
  el<HTMLButtonElement>("render-comparison").addEventListener("click", () => void renderComparison());
  el<HTMLInputElement>("knob-max-transfers").addEventListener("input", () => {
    el<HTMLSpanElement>("knob-max-transfers-value").textContent =
      el<HTMLInputElement>("knob-max-transfers").value;
  });
  wireCsvDrop();
  void api.health()
    .then((h) => setStatus(`service ${h.version} ready`))
    .catch(showError);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}

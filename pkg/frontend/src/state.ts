/** View state: active scenario, knob values, accumulated Pareto points, run picks. */

import { Knobs, DEFAULT_KNOBS } from "./knobs.js";
import { ParetoPayload, PlanWire, RunDocument } from "./types.js";

export interface ParetoEntry {
  max_transfers: number;
  surge_bed_days: number;
  transfers_used: number;
  run_id: string | null;
}

export interface ViewState {
  scenarioId: string | null;
  knobs: Knobs;
  runs: { run_id: string; label: string }[];
  selectedRuns: [string | null, string | null];
  paretoPoints: ParetoEntry[];
}

export function initialState(): ViewState {
  return {
    scenarioId: null,
    knobs: { ...DEFAULT_KNOBS },
    runs: [],
    selectedRuns: [null, null],
    paretoPoints: [],
  };
}

/**
 * Merge a slider-driven solve into the accumulated trade-off points. The new
 * point must be consistent with the curve: surge bed-days may not rise as the
 * transfer budget grows. Returns the updated list or flags the inconsistency.
 */
export function addParetoPoint(
  points: ParetoEntry[],
  entry: ParetoEntry,
): { points: ParetoEntry[]; consistent: boolean } {
  const merged = [...points.filter((p) => p.max_transfers !== entry.max_transfers), entry];
  merged.sort((a, b) => a.max_transfers - b.max_transfers);
  let consistent = true;
  for (let i = 1; i < merged.length; i++) {
    if (merged[i].surge_bed_days > merged[i - 1].surge_bed_days + 1e-9) {
      consistent = false;
    }
  }
  return { points: merged, consistent };
}

export function paretoPayloadFromPoints(points: ParetoEntry[]): ParetoPayload {
  const zero = points.find((p) => p.surge_bed_days <= 1e-9);
  return {
    chart: "transfer_pareto",
    points: points.map((p) => ({
      max_transfers: p.max_transfers,
      surge_bed_days: p.surge_bed_days,
      transfers_used: p.transfers_used,
      objective: null,
      status: "solved",
    })),
    zero_surge_transfers: zero ? zero.max_transfers : null,
  };
}

export interface AllocationDiff {
  unit: string;
  days_changed: number;
  only_in_a: number[];
  only_in_b: number[];
}

/** Side-by-side plan diff: per-unit allocation changes plus transfer deltas. */
export function diffPlans(a: PlanWire, b: PlanWire): {
  allocations: AllocationDiff[];
  transfers: { key: string; a: number; b: number }[];
  metrics: { name: string; a: number; b: number }[];
} {
  const units = new Set([...Object.keys(a.allocations), ...Object.keys(b.allocations)]);
  const allocations: AllocationDiff[] = [];
  for (const unit of [...units].sort()) {
    const sa = a.allocations[unit] ?? [];
    const sb = b.allocations[unit] ?? [];
    const onlyA: number[] = [];
    const onlyB: number[] = [];
    const T = Math.max(sa.length, sb.length);
    for (let t = 0; t < T; t++) {
      const va = sa[t] ?? 0;
      const vb = sb[t] ?? 0;
      if (va && !vb) onlyA.push(t);
      if (vb && !va) onlyB.push(t);
    }
    if (onlyA.length || onlyB.length) {
      allocations.push({ unit, days_changed: onlyA.length + onlyB.length, only_in_a: onlyA, only_in_b: onlyB });
    }
  }
  const transferKey = (t: { from: string; to: string; day: number }) => `${t.from}->${t.to}@${t.day}`;
  const ta = new Map(a.transfers.map((t) => [transferKey(t), t.count]));
  const tb = new Map(b.transfers.map((t) => [transferKey(t), t.count]));
  const transfers = [...new Set([...ta.keys(), ...tb.keys()])].sort().map((key) => ({
    key, a: ta.get(key) ?? 0, b: tb.get(key) ?? 0,
  })).filter((row) => row.a !== row.b);
  const metricNames = ["bed_days", "surge_bed_days", "transfers_used"] as const;
  const metrics = metricNames.map((name) => ({
    name, a: a.metrics[name] as number, b: b.metrics[name] as number,
  }));
  return { allocations, transfers, metrics };
}

export function runLabel(doc: RunDocument, runId: string): string {
  const plan = doc.plan;
  const bits = [runId.slice(-6), plan.status, `${Math.round(plan.metrics.bed_days)} bed-days`];
  if (plan.allow_transfers) {
    bits.push(`${plan.metrics.transfers_used} transfers`);
  }
  return bits.join(" · ");
}

/**
 * Chart renderers: each takes a plot payload from the service and returns an
 * SVG string. Pure functions so they can be tested against golden payloads.
 */

import {
  GanttPayload, OccupancyPayload, ParetoPayload, RequiredCapacityPayload,
  StrategyPayload, TimelinePayload,
} from "../types.js";
import {
  DEFAULT_FRAME, Frame, LEVEL_COLORS, SERIES_COLORS, esc, linearScale, niceTicks,
  openSvg, polyline, stepPath, xAxis, yAxis,
} from "./svg.js";

function frameFor(height?: number): Frame {
  return height ? { ...DEFAULT_FRAME, height } : DEFAULT_FRAME;
}

export function renderOccupancy(payload: OccupancyPayload): string {
  const frame = frameFor();
  const days = payload.days;
  const names = Object.keys(payload.series).sort((a, b) =>
    a === "system" ? 1 : b === "system" ? -1 : a.localeCompare(b));
  const maxRatio = Math.max(
    payload.reference_line * 1.1,
    ...names.flatMap((n) => payload.series[n]),
  );
  const sx = linearScale(0, Math.max(1, days.length - 1), frame.margin.left, frame.width - frame.margin.right);
  const sy = linearScale(0, maxRatio * 1.05, frame.height - frame.margin.bottom, frame.margin.top);
  let svg = openSvg(frame, "Occupancy relative to baseline capacity");
  svg += xAxis(frame, niceTicks(0, days.length - 1), sx, "day");
  svg += yAxis(frame, niceTicks(0, maxRatio), sy, (v) => `${Math.round(v * 100)}%`);
  const refY = sy(payload.reference_line);
  svg += `<line class="reference-line" x1="${frame.margin.left}" y1="${refY}" x2="${frame.width - frame.margin.right}" y2="${refY}"/>`;
  names.forEach((name, i) => {
    const pts: [number, number][] = payload.series[name].map((v, t) => [sx(t), sy(v)]);
    const cls = name === "system" ? "series-line system" : "series-line";
    const color = name === "system" ? "#10316b" : SERIES_COLORS[i % SERIES_COLORS.length];
    svg += polyline(pts, cls, `stroke="${color}" data-series="${esc(name)}"`);
  });
  svg += "</svg>";
  return svg;
}

export function renderRequiredCapacity(payload: RequiredCapacityPayload): string {
  const hospitals = Object.keys(payload.hospitals).sort();
  const frame = frameFor(120 + hospitals.length * 90);
  const days = payload.days;
  let svg = openSvg(frame, "Required dedicated capacity");
  const bandH = (frame.height - frame.margin.top - frame.margin.bottom) / Math.max(1, hospitals.length);
  const sx = linearScale(0, Math.max(1, days.length - 1), frame.margin.left, frame.width - frame.margin.right);
  hospitals.forEach((hid, i) => {
    const data = payload.hospitals[hid];
    const top = frame.margin.top + i * bandH + 8;
    const bottom = frame.margin.top + (i + 1) * bandH - 8;
    const maxV = Math.max(...data.capacity, ...data.required, 1);
    const sy = linearScale(0, maxV * 1.1, bottom, top);
    svg += `<text class="band-label" x="${frame.margin.left}" y="${top - 2}">${esc(hid)}</text>`;
    svg += polyline(days.map((t) => [sx(t), sy(data.demand[t])]), "series-line demand", 'stroke="#888" stroke-dasharray="3,2"');
    svg += stepPath(days.map((t) => [sx(t), sy(data.capacity[t])]), "series-line capacity");
    for (const t of data.cap_binding_days) {
      svg += `<circle class="cap-binding" cx="${sx(t)}" cy="${sy(data.required[t])}" r="2.1"/>`;
    }
  });
  svg += xAxis(frame, niceTicks(0, days.length - 1), sx, "day");
  svg += "</svg>";
  return svg;
}

export function renderGantt(payload: GanttPayload): string {
  const rows = [...payload.rows].sort((a, b) =>
    a.hospital === b.hospital ? a.priority_rank - b.priority_rank : a.hospital.localeCompare(b.hospital));
  const rowH = 16;
  const frame = frameFor(70 + rows.length * rowH);
  frame.margin.left = 130;
  const sx = linearScale(0, payload.horizon, frame.margin.left, frame.width - frame.margin.right);
  const maxBeds = Math.max(...rows.map((r) => r.beds), 1);
  let svg = openSvg(frame, "Unit allocations");
  rows.forEach((row, i) => {
    const y = frame.margin.top + i * rowH;
    svg += `<text class="row-label" x="${frame.margin.left - 6}" y="${y + rowH - 5}" text-anchor="end">${esc(row.unit)}</text>`;
    const shade = 0.35 + 0.6 * (row.beds / maxBeds);
    for (const [start, end] of row.active_spans) {
      svg += `<rect class="gantt-bar" data-unit="${esc(row.unit)}" x="${sx(start).toFixed(2)}" y="${y + 2}" ` +
        `width="${(sx(end) - sx(start)).toFixed(2)}" height="${rowH - 4}" fill="#1f77b4" fill-opacity="${shade.toFixed(2)}">` +
        `<title>${esc(row.unit)}: ${row.beds} beds (${esc(row.surge_level)}), days ${start}-${end - 1}</title></rect>`;
    }
  });
  svg += xAxis(frame, niceTicks(0, payload.horizon), sx, "day");
  svg += "</svg>";
  return svg;
}

export function renderStrategies(payload: StrategyPayload): string {
  const rows = payload.strategies.filter((s) => Number.isFinite(s.bed_days));
  const rowH = 34;
  const frame = frameFor(70 + rows.length * rowH);
  frame.margin.left = 230;
  const maxV = Math.max(...rows.map((r) => r.bed_days), 1);
  const sx = linearScale(0, maxV * 1.05, frame.margin.left, frame.width - frame.margin.right);
  let svg = openSvg(frame, "Required capacity by strategy (bed-days)");
  rows.forEach((row, i) => {
    const y = frame.margin.top + i * rowH;
    svg += `<text class="row-label" x="${frame.margin.left - 6}" y="${y + 21}" text-anchor="end">${esc(row.strategy)}</text>`;
    svg += `<rect class="bar total" x="${frame.margin.left}" y="${y + 6}" width="${(sx(row.bed_days) - frame.margin.left).toFixed(2)}" height="20"/>`;
    svg += `<rect class="bar surge" x="${frame.margin.left}" y="${y + 6}" width="${(sx(row.surge_bed_days) - frame.margin.left).toFixed(2)}" height="20">` +
      `<title>surge bed-days: ${row.surge_bed_days}</title></rect>`;
    svg += `<text class="bar-value" x="${sx(row.bed_days) + 4}" y="${y + 21}">${Math.round(row.bed_days)}</text>`;
  });
  svg += "</svg>";
  return svg;
}

export function renderPareto(payload: ParetoPayload): string {
  const frame = frameFor();
  const points = payload.points.filter((p) => Number.isFinite(p.surge_bed_days));
  const maxX = Math.max(...points.map((p) => p.max_transfers), 1);
  const maxY = Math.max(...points.map((p) => p.surge_bed_days), 1);
  const sx = linearScale(0, maxX * 1.05, frame.margin.left, frame.width - frame.margin.right);
  const sy = linearScale(0, maxY * 1.08, frame.height - frame.margin.bottom, frame.margin.top);
  let svg = openSvg(frame, "Transfers vs required surge capacity");
  svg += xAxis(frame, niceTicks(0, maxX), sx, "max transfers allowed");
  svg += yAxis(frame, niceTicks(0, maxY), sy);
  svg += polyline(points.map((p) => [sx(p.max_transfers), sy(p.surge_bed_days)]), "series-line pareto", 'stroke="#10316b"');
  for (const p of points) {
    svg += `<circle class="pareto-point" data-max-transfers="${p.max_transfers}" cx="${sx(p.max_transfers).toFixed(2)}" ` +
      `cy="${sy(p.surge_bed_days).toFixed(2)}" r="4">` +
      `<title>S=${p.max_transfers}: ${p.surge_bed_days} surge bed-days (${p.transfers_used} used, ${esc(p.status)})</title></circle>`;
  }
  if (payload.zero_surge_transfers !== null) {
    const x = sx(payload.zero_surge_transfers);
    svg += `<line class="reference-line" x1="${x}" y1="${frame.margin.top}" x2="${x}" y2="${frame.height - frame.margin.bottom}"/>`;
  }
  svg += "</svg>";
  return svg;
}

export function renderTimeline(payload: TimelinePayload): string {
  const hospitals = Object.keys(payload.hospitals).sort();
  const rowH = 26;
  const frame = frameFor(70 + hospitals.length * rowH);
  frame.margin.left = 90;
  const days = payload.days;
  const sx = linearScale(0, days.length, frame.margin.left, frame.width - frame.margin.right);
  let svg = openSvg(frame, "Maximum surge level per day");
  hospitals.forEach((hid, i) => {
    const y = frame.margin.top + i * rowH;
    svg += `<text class="row-label" x="${frame.margin.left - 6}" y="${y + 17}" text-anchor="end">${esc(hid)}</text>`;
    const levels = payload.hospitals[hid];
    let start = 0;
    for (let t = 1; t <= levels.length; t++) {
      if (t === levels.length || levels[t] !== levels[start]) {
        const color = LEVEL_COLORS[levels[start]] ?? "#ccc";
        svg += `<rect class="level-band" data-level="${esc(levels[start])}" x="${sx(start).toFixed(2)}" y="${y + 4}" ` +
          `width="${(sx(t) - sx(start)).toFixed(2)}" height="${rowH - 8}" fill="${color}">` +
          `<title>${esc(hid)}: ${esc(levels[start])} days ${start}-${t - 1}</title></rect>`;
        start = t;
      }
    }
  });
  svg += xAxis(frame, niceTicks(0, days.length), sx, "day");
  svg += "</svg>";
  return svg;
}

export type AnyPayload =
  | OccupancyPayload | RequiredCapacityPayload | GanttPayload
  | StrategyPayload | ParetoPayload | TimelinePayload;

/** Schema-driven dispatch: any valid payload renders through its chart field. */
export function renderPayload(payload: AnyPayload): string {
  switch (payload.chart) {
    case "occupancy_vs_baseline": return renderOccupancy(payload);
    case "required_capacity": return renderRequiredCapacity(payload);
    case "unit_allocation_gantt": return renderGantt(payload);
    case "strategy_comparison": return renderStrategies(payload);
    case "transfer_pareto": return renderPareto(payload);
    case "surge_timeline": return renderTimeline(payload);
    default: {
      const unknown: never = payload;
      throw new Error(`unknown chart payload: ${(unknown as { chart?: string }).chart}`);
    }
  }
}

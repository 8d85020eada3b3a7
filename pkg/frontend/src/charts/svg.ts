/** Tiny SVG helpers shared by the chart renderers (no chart library). */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 720,
  height: 320,
  margin: { top: 24, right: 24, bottom: 36, left: 52 },
};

export function innerSize(frame: Frame): { w: number; h: number } {
  return {
    w: frame.width - frame.margin.left - frame.margin.right,
    h: frame.height - frame.margin.top - frame.margin.bottom,
  };
}

export function linearScale(domainMin: number, domainMax: number, rangeMin: number, rangeMax: number) {
  const span = domainMax - domainMin || 1;
  return (v: number) => rangeMin + ((v - domainMin) / span) * (rangeMax - rangeMin);
}

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function openSvg(frame: Frame, title: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${frame.width} ${frame.height}" ` +
    `role="img" class="chart" data-title="${esc(title)}">` +
    `<text x="${frame.margin.left}" y="16" class="chart-title">${esc(title)}</text>`
  );
}

export function polyline(points: [number, number][], cls: string, extra = ""): string {
  const path = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
  return `<polyline fill="none" class="${cls}" points="${path}" ${extra}/>`;
}

/** Step path (horizontal-then-vertical), for capacity staircases. */
export function stepPath(points: [number, number][], cls: string): string {
  if (!points.length) return "";
  let d = `M ${points[0][0].toFixed(2)} ${points[0][1].toFixed(2)}`;
  for (let i = 1; i < points.length; i++) {
    d += ` H ${points[i][0].toFixed(2)} V ${points[i][1].toFixed(2)}`;
  }
  return `<path fill="none" class="${cls}" d="${d}"/>`;
}

export function xAxis(frame: Frame, ticks: number[], scale: (v: number) => number, label = ""): string {
  const y = frame.height - frame.margin.bottom;
  let out = `<line class="axis" x1="${frame.margin.left}" y1="${y}" x2="${frame.width - frame.margin.right}" y2="${y}"/>`;
  for (const t of ticks) {
    const x = scale(t);
    out += `<line class="tick" x1="${x}" y1="${y}" x2="${x}" y2="${y + 4}"/>`;
    out += `<text class="tick-label" x="${x}" y="${y + 16}" text-anchor="middle">${t}</text>`;
  }
  if (label) {
    out += `<text class="axis-label" x="${frame.width / 2}" y="${frame.height - 4}" text-anchor="middle">${esc(label)}</text>`;
  }
  return out;
}

export function yAxis(frame: Frame, ticks: number[], scale: (v: number) => number, fmt: (v: number) => string = String): string {
  const x = frame.margin.left;
  let out = `<line class="axis" x1="${x}" y1="${frame.margin.top}" x2="${x}" y2="${frame.height - frame.margin.bottom}"/>`;
  for (const t of ticks) {
    const y = scale(t);
    out += `<line class="tick" x1="${x - 4}" y1="${y}" x2="${x}" y2="${y}"/>`;
    out += `<text class="tick-label" x="${x - 7}" y="${y + 3}" text-anchor="end">${fmt(t)}</text>`;
  }
  return out;
}

export function niceTicks(min: number, max: number, count = 5): number[] {
  const span = max - min || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const factor = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * factor;
  const start = Math.ceil(min / s) * s;
  const out: number[] = [];
  for (let v = start; v <= max + 1e-9; v += s) out.push(Number(v.toFixed(10)));
  return out;
}

export const SERIES_COLORS = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

export const LEVEL_COLORS: Record<string, string> = {
  baseline: "#7fb3d5",
  level1: "#f7dc6f",
  level2: "#f5b041",
  level3: "#e74c3c",
  max: "#922b21",
};

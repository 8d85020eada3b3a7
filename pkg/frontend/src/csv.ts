/** Minimal CSV parsing for the series drag-in (hospital_id,date,census,admissions). */

export interface SeriesRow {
  hospital_id: string;
  date: string;
  census: number | null;
  admissions: number | null;
}

export function parseSeriesCsv(text: string): SeriesRow[] {
  const lines = text.split(/\r?\n/).filter((ln) => ln.trim() !== "");
  if (!lines.length) throw new Error("empty CSV");
  const header = lines[0].split(",").map((h) => h.trim());
  const idx = {
    hospital_id: header.indexOf("hospital_id"),
    date: header.indexOf("date"),
    census: header.indexOf("census"),
    admissions: header.indexOf("admissions"),
  };
  if (idx.hospital_id < 0 || idx.date < 0) {
    throw new Error("CSV needs hospital_id and date columns");
  }
  const rows: SeriesRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",").map((c) => c.trim());
    const read = (j: number): number | null => {
      if (j < 0 || cells[j] === undefined || cells[j] === "") return null;
      const v = Number(cells[j]);
      if (!Number.isFinite(v)) throw new Error(`line ${i + 1}: bad number ${cells[j]!}`);
      if (v < 0) throw new Error(`line ${i + 1}: negative value ${v}`);
      return v;
    };
    rows.push({
      hospital_id: cells[idx.hospital_id],
      date: cells[idx.date],
      census: read(idx.census),
      admissions: read(idx.admissions),
    });
  }
  return rows;
}

/** Group parsed rows into per-hospital date-ordered series for the scenario editor. */
export function seriesByHospital(rows: SeriesRow[]): Record<string, { census: number[]; admissions: number[] }> {
  const grouped = new Map<string, SeriesRow[]>();
  for (const row of rows) {
    const bucket = grouped.get(row.hospital_id) ?? [];
    bucket.push(row);
    grouped.set(row.hospital_id, bucket);
  }
  const out: Record<string, { census: number[]; admissions: number[] }> = {};
  for (const [hid, bucket] of grouped) {
    bucket.sort((a, b) => a.date.localeCompare(b.date));
    out[hid] = {
      census: bucket.map((r) => r.census).filter((v): v is number => v !== null),
      admissions: bucket.map((r) => r.admissions).filter((v): v is number => v !== null),
    };
  }
  return out;
}

/**
 * The three figure kinds over the solver CLI's published outputs:
 *
 * - sweep-lines: mean objective (with +-std band) per solver vs SNR;
 * - convergence: objective trajectory per solver vs sweep index;
 * - runtime-bars: median seconds per solver, grouped by antenna count,
 *   from the runtime benchmark table.
 *
 * Rendering is pure: the same inputs produce the same SVG string.
 * Missing solver rows produce a warning and a partial plot; schema
 * violations and empty inputs are errors.
 */

import {
  parseSweepCsv,
  parseTraceJson,
  SchemaError,
  SweepRow,
} from "./schema.js";
import {
  axes,
  band,
  bar,
  finish,
  legend,
  makeFrame,
  PALETTE,
  polyline,
} from "./svg.js";

export type FigureKind = "sweep-lines" | "convergence" | "runtime-bars";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  out: string;
  xlabel?: string;
  ylabel?: string;
  title?: string;
  dpi?: number;
  solvers?: string[];
}

export interface Rendered {
  svg: string;
  series: number;
  warnings: string[];
}

const FIG_W_IN = 6.4;
const FIG_H_IN = 4.8;

export function figureSize(dpi: number): [number, number] {
  return [Math.round(FIG_W_IN * dpi), Math.round(FIG_H_IN * dpi)];
}

function pad(lo: number, hi: number): [number, number] {
  if (!(hi > lo)) {
    return [lo - 0.5, lo + 0.5];
  }
  const m = 0.06 * (hi - lo);
  return [lo - m, hi + m];
}

export function renderSweepLines(
  texts: string[],
  spec: Partial<FigureSpec> = {},
): Rendered {
  const rows = texts.flatMap((t) => parseSweepCsv(t));
  if (rows.length === 0) {
    throw new SchemaError("sweep input has no data rows");
  }
  const warnings: string[] = [];
  const solvers = spec.solvers ?? [...new Set(rows.map((r) => r.solver))];
  const bySolver = new Map<string, SweepRow[]>();
  for (const name of solvers) {
    const sub = rows
      .filter((r) => r.solver === name)
      .sort((a, b) => a.snr_db - b.snr_db);
    if (sub.length === 0) {
      warnings.push(`no rows for solver ${name}; plotting without it`);
      continue;
    }
    bySolver.set(name, sub);
  }
  if (bySolver.size === 0) {
    throw new SchemaError("no requested solver has any rows");
  }

  const xs = rows.map((r) => r.snr_db);
  const loVals = rows.map((r) => r.mean_obj - r.std_obj);
  const hiVals = rows.map((r) => r.mean_obj + r.std_obj);
  const xDomain = pad(Math.min(...xs), Math.max(...xs));
  const yDomain = pad(Math.min(...loVals), Math.max(...hiVals));

  const [w, h] = figureSize(spec.dpi ?? 96);
  const frame = makeFrame(w, h, xDomain, yDomain);
  axes(frame, xDomain, yDomain, spec.xlabel ?? "SNR [dB]",
    spec.ylabel ?? "objective", spec.title ?? "");
  const entries: Array<[string, string]> = [];
  let idx = 0;
  for (const [name, sub] of bySolver) {
    const color = PALETTE[idx % PALETTE.length];
    idx += 1;
    band(
      frame,
      sub.map((r) => [r.snr_db, r.mean_obj + r.std_obj] as [number, number]),
      sub.map((r) => [r.snr_db, r.mean_obj - r.std_obj] as [number, number]),
      color,
    );
    polyline(frame, sub.map((r) => [r.snr_db, r.mean_obj]), color, name);
    entries.push([name, color]);
  }
  legend(frame, entries);
  return { svg: finish(frame), series: bySolver.size, warnings };
}

export function renderConvergence(
  texts: string[],
  spec: Partial<FigureSpec> = {},
): Rendered {
  const results = texts.flatMap((t) => parseTraceJson(t).results);
  const warnings: string[] = [];
  const usable = results.filter((r) => r.trajectory.length > 0);
  for (const r of results) {
    if (r.trajectory.length === 0) {
      warnings.push(`solver ${r.solver} has an empty trajectory; skipped`);
    }
  }
  if (usable.length === 0) {
    throw new SchemaError("no non-empty trajectories to plot");
  }
  const maxLen = Math.max(...usable.map((r) => r.trajectory.length));
  const values = usable.flatMap((r) => r.trajectory);
  const xDomain: [number, number] = [0, Math.max(maxLen - 1, 1)];
  const yDomain = pad(Math.min(...values), Math.max(...values));
  const [w, h] = figureSize(spec.dpi ?? 96);
  const frame = makeFrame(w, h, xDomain, yDomain);
  axes(frame, xDomain, yDomain, spec.xlabel ?? "iteration",
    spec.ylabel ?? "objective", spec.title ?? "");
  const entries: Array<[string, string]> = [];
  usable.forEach((r, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    polyline(frame, r.trajectory.map((v, i) => [i, v]), color, r.solver);
    entries.push([r.solver, color]);
  });
  legend(frame, entries);
  return { svg: finish(frame), series: usable.length, warnings };
}

interface BenchCell {
  group: string;
  solver: string;
  seconds: number;
}

export function renderRuntimeBars(
  texts: string[],
  spec: Partial<FigureSpec> = {},
): Rendered {
  const rows = texts.flatMap((t) => parseSweepCsv(t));
  const warnings: string[] = [];
  const cells: BenchCell[] = [];
  for (const row of rows) {
    // bench rows are named "<solver>-nt<N>"; ratio rows are summaries
    const m = row.solver.match(/^(\w+)-nt(\d+)$/);
    if (!m) {
      if (!row.solver.startsWith("ratio")) {
        warnings.push(`unrecognized bench row ${row.solver}; skipped`);
      }
      continue;
    }
    if (m[1] === "ratio") {
      continue;
    }
    cells.push({ group: `n_t=${m[2]}`, solver: m[1], seconds: row.mean_seconds });
  }
  if (cells.length === 0) {
    throw new SchemaError("no runtime rows in the bench table");
  }
  const groups = [...new Set(cells.map((c) => c.group))];
  const solvers = [...new Set(cells.map((c) => c.solver))];
  const yMax = Math.max(...cells.map((c) => c.seconds));
  const xDomain: [number, number] = [0, groups.length];
  const yDomain: [number, number] = [0, yMax * 1.15];
  const [w, h] = figureSize(spec.dpi ?? 96);
  const frame = makeFrame(w, h, xDomain, yDomain);
  axes(frame, xDomain, yDomain, spec.xlabel ?? "transmit antennas",
    spec.ylabel ?? "median seconds per solve", spec.title ?? "");
  // relabel group centers under the x axis
  const bottom = frame.height - frame.margins.bottom;
  groups.forEach((g, gi) => {
    frame.parts.push(
      `<text x="${frame.x(gi + 0.5)}" y="${bottom + 30}" text-anchor="middle" ` +
        `font-size="11" font-family="sans-serif">${g}</text>`,
    );
  });
  const entries: Array<[string, string]> = [];
  const slot = 0.8 / Math.max(solvers.length, 1);
  solvers.forEach((name, si) => {
    const color = PALETTE[si % PALETTE.length];
    entries.push([name, color]);
    let plotted = false;
    groups.forEach((g, gi) => {
      const cell = cells.find((c) => c.group === g && c.solver === name);
      if (!cell) {
        warnings.push(`no ${name} row for ${g}`);
        return;
      }
      plotted = true;
      const x0 = frame.x(gi + 0.1 + si * slot);
      const x1 = frame.x(gi + 0.1 + (si + 1) * slot);
      bar(frame, x0, (x1 - x0) * 0.92, cell.seconds, 0, color, name);
    });
    if (!plotted) {
      entries.pop();
    }
  });
  legend(frame, entries);
  return { svg: finish(frame), series: entries.length, warnings };
}

export function render(
  kind: FigureKind,
  texts: string[],
  spec: Partial<FigureSpec> = {},
): Rendered {
  switch (kind) {
    case "sweep-lines":
      return renderSweepLines(texts, spec);
    case "convergence":
      return renderConvergence(texts, spec);
    case "runtime-bars":
      return renderRuntimeBars(texts, spec);
    default:
      throw new SchemaError(`unknown figure kind ${String(kind)}`);
  }
}

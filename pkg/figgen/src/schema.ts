/**
 * Input schemas: the CSV sweep table and the solve/trace JSON document
 * published by the solver CLI (schema version "1").  Parsing is strict:
 * anything that does not match the published header or version is a
 * SchemaError, never a silent guess.
 */

export const CSV_HEADER = [
  "snr_db",
  "solver",
  "mean_obj",
  "std_obj",
  "mean_iters",
  "mean_seconds",
  "seed",
] as const;

export const SCHEMA_VERSION = "1";

export interface SweepRow {
  snr_db: number;
  solver: string;
  mean_obj: number;
  std_obj: number;
  mean_iters: number;
  mean_seconds: number;
  seed: number;
}

export interface TraceResult {
  solver: string;
  objective: number;
  trajectory: number[];
}

export interface TraceDocument {
  version: string;
  results: TraceResult[];
}

export class SchemaError extends Error {}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV input");
  }
  const header = lines[0].split(",");
  if (header.join(",") !== CSV_HEADER.join(",")) {
    throw new SchemaError(
      `unexpected CSV header: ${lines[0]} (want ${CSV_HEADER.join(",")})`,
    );
  }
  const rows: SweepRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== CSV_HEADER.length) {
      throw new SchemaError(`malformed CSV row: ${line}`);
    }
    const nums = [0, 2, 3, 4, 5, 6].map((i) => Number(parts[i]));
    if (nums.some((x) => Number.isNaN(x))) {
      throw new SchemaError(`non-numeric field in row: ${line}`);
    }
    rows.push({
      snr_db: nums[0],
      solver: parts[1],
      mean_obj: nums[1],
      std_obj: nums[2],
      mean_iters: nums[3],
      mean_seconds: nums[4],
      seed: nums[5],
    });
  }
  return rows;
}

export function parseTraceJson(text: string): TraceDocument {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`not valid JSON: ${(err as Error).message}`);
  }
  const obj = doc as Record<string, unknown>;
  if (obj?.version !== SCHEMA_VERSION) {
    throw new SchemaError(
      `unsupported schema version ${String(obj?.version)} (want ${SCHEMA_VERSION})`,
    );
  }
  if (!Array.isArray(obj.results)) {
    throw new SchemaError("trace document has no results array");
  }
  const results: TraceResult[] = [];
  for (const entry of obj.results) {
    const e = entry as Record<string, unknown>;
    if (typeof e.solver !== "string" || !Array.isArray(e.trajectory)) {
      throw new SchemaError("trace result needs a solver and a trajectory");
    }
    results.push({
      solver: e.solver,
      objective: Number(e.objective),
      trajectory: (e.trajectory as unknown[]).map((x) => Number(x)),
    });
  }
  return { version: SCHEMA_VERSION, results };
}

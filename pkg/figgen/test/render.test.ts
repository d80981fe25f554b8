import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  figureSize,
  parseSweepCsv,
  parseTraceJson,
  render,
  renderConvergence,
  renderRuntimeBars,
  renderSweepLines,
  SchemaError,
} from "../src/index.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = (name: string) =>
  readFileSync(join(here, "fixtures", name), "utf-8");

const sweepCsv = fixture("sweep.csv");
const benchCsv = fixture("bench.csv");
const traceJson = fixture("convergence.json");

function countSeries(svg: string): number {
  return (svg.match(/class="series"/g) ?? []).length;
}

function dimensions(svg: string): [string, string] {
  const w = svg.match(/<svg[^>]* width="(\d+)"/)![1];
  const h = svg.match(/<svg[^>]* height="(\d+)"/)![1];
  return [w, h];
}

describe("schema parsing", () => {
  it("parses the published CSV header and rows", () => {
    const rows = parseSweepCsv(sweepCsv);
    expect(rows.length).toBeGreaterThan(0);
    expect(new Set(rows.map((r) => r.solver))).toEqual(
      new Set(["closed-form", "oracle"]),
    );
  });

  it("rejects a foreign CSV header", () => {
    expect(() => parseSweepCsv("a,b,c\n1,2,3\n")).toThrow(SchemaError);
  });

  it("rejects wrong schema versions in trace JSON", () => {
    const doc = JSON.parse(traceJson);
    doc.version = "2";
    expect(() => parseTraceJson(JSON.stringify(doc))).toThrow(SchemaError);
  });
});

describe("sweep-lines", () => {
  it("renders one line per solver from the golden sweep", () => {
    const out = renderSweepLines([sweepCsv]);
    // two polylines (bars/none) from two solvers
    expect(out.series).toBe(2);
    expect(countSeries(out.svg)).toBe(2);
    expect(out.warnings).toEqual([]);
    expect(out.svg.startsWith("<svg ")).toBe(true);
  });

  it("re-renders pixel-dimension-identical output", () => {
    const a = renderSweepLines([sweepCsv]);
    const b = renderSweepLines([sweepCsv]);
    expect(a.svg).toBe(b.svg);
    expect(dimensions(a.svg)).toEqual(dimensions(b.svg));
    const [w, h] = figureSize(96);
    expect(dimensions(a.svg)).toEqual([String(w), String(h)]);
  });

  it("honours dpi in the pixel dimensions", () => {
    const hi = renderSweepLines([sweepCsv], { dpi: 150 });
    const [w, h] = figureSize(150);
    expect(dimensions(hi.svg)).toEqual([String(w), String(h)]);
  });

  it("warns and plots partially when a solver is missing", () => {
    const out = renderSweepLines([sweepCsv], {
      solvers: ["closed-form", "does-not-exist"],
    });
    expect(out.series).toBe(1);
    expect(out.warnings.length).toBe(1);
    expect(out.warnings[0]).toContain("does-not-exist");
  });

  it("errors on empty row sets", () => {
    const headerOnly = sweepCsv.split("\n")[0] + "\n";
    expect(() => renderSweepLines([headerOnly])).toThrow(SchemaError);
  });
});

describe("convergence", () => {
  it("renders one trajectory line per solver run", () => {
    const doc = parseTraceJson(traceJson);
    const out = renderConvergence([traceJson]);
    expect(out.series).toBe(doc.results.length);
    expect(countSeries(out.svg)).toBe(doc.results.length);
  });

  it("skips empty trajectories with a warning", () => {
    const doc = JSON.parse(traceJson);
    doc.results[0].trajectory = [];
    const out = renderConvergence([JSON.stringify(doc)]);
    expect(out.series).toBe(doc.results.length - 1);
    expect(out.warnings.length).toBe(1);
  });

  it("re-renders identically", () => {
    expect(renderConvergence([traceJson]).svg).toBe(
      renderConvergence([traceJson]).svg,
    );
  });
});

describe("runtime-bars", () => {
  it("renders grouped bars per antenna count and solver", () => {
    const out = renderRuntimeBars([benchCsv]);
    expect(out.series).toBe(2); // legend entries: ao, bcd
    // one bar per (solver, n_t) pair
    expect(countSeries(out.svg)).toBe(4);
  });

  it("re-renders identically", () => {
    expect(renderRuntimeBars([benchCsv]).svg).toBe(
      renderRuntimeBars([benchCsv]).svg,
    );
  });

  it("errors when only ratio rows remain", () => {
    const lines = benchCsv.split("\n");
    const filtered = [lines[0]]
      .concat(lines.slice(1).filter((l) => l.startsWith("-5,ratio")))
      .join("\n");
    expect(() => renderRuntimeBars([filtered + "\n"])).toThrow(SchemaError);
  });
});

describe("dispatch", () => {
  it("routes all three kinds and rejects unknown ones", () => {
    expect(render("sweep-lines", [sweepCsv]).series).toBe(2);
    expect(render("convergence", [traceJson]).series).toBeGreaterThan(0);
    expect(render("runtime-bars", [benchCsv]).series).toBe(2);
    expect(() =>
      render("pie" as never, [sweepCsv]),
    ).toThrow(SchemaError);
  });
});

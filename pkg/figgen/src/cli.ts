#!/usr/bin/env node
/**
 * figgen --spec <file.json> [--out <path>]
 *
 * The spec file holds a FigureSpec: kind, input paths, output path and
 * optional labels.  Inputs are the solver CLI's published CSV/JSON
 * files; the output is a deterministic SVG.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { FigureSpec, render } from "./render.js";
import { SchemaError } from "./schema.js";

function usage(): never {
  console.error("usage: figgen --spec <figure.json> [--out <path>]");
  process.exit(2);
}

export function main(argv: string[]): number {
  let specPath: string | undefined;
  let outOverride: string | undefined;
  for (let i = 0; i < argv.length; i += 1) {
    if (argv[i] === "--spec") {
      specPath = argv[++i];
    } else if (argv[i] === "--out") {
      outOverride = argv[++i];
    } else {
      usage();
    }
  }
  if (!specPath) {
    usage();
  }
  const spec = JSON.parse(readFileSync(specPath, "utf-8")) as FigureSpec;
  if (!spec.kind || !Array.isArray(spec.inputs) || spec.inputs.length === 0) {
    console.error("figure spec needs 'kind' and a non-empty 'inputs' list");
    return 2;
  }
  const base = dirname(resolve(specPath));
  const texts = spec.inputs.map((p) => readFileSync(resolve(base, p), "utf-8"));
  let rendered;
  try {
    rendered = render(spec.kind, texts, spec);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  for (const warning of rendered.warnings) {
    console.warn(`warning: ${warning}`);
  }
  const out = outOverride ?? spec.out;
  if (!out) {
    console.error("no output path (spec.out or --out)");
    return 2;
  }
  writeFileSync(resolve(base, out), rendered.svg, "utf-8");
  console.log(`wrote ${resolve(base, out)} (${rendered.series} series)`);
  return 0;
}

const invoked = process.argv[1] ?? "";
if (invoked.endsWith("cli.js") || invoked.endsWith("figgen")) {
  process.exit(main(process.argv.slice(2)));
}

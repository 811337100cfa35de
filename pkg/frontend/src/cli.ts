#!/usr/bin/env node
/**
 * pmqs-figures: render the standard figure set from a run directory.
 *
 *   pmqs-figures --run-dir DIR --all [--out-dir DIR]
 *   pmqs-figures --run-dir DIR --only density_overlay,qq_final
 *
 * Exit codes: 0 ok, 2 usage, 3 schema mismatch in an artifact.
 */

import { mkdirSync, writeFileSync } from "fs";
import { join, resolve } from "path";

import { SchemaError } from "./csv.js";
import { Figure, renderAll, STANDARD_SET } from "./figures.js";

interface Args {
  runDir?: string;
  outDir?: string;
  all: boolean;
  only?: string[];
}

function parseArgs(argv: string[]): Args {
  const args: Args = { all: false };
  for (let i = 0; i < argv.length; i += 1) {
    const a = argv[i];
    if (a === "--run-dir") args.runDir = argv[++i];
    else if (a === "--out-dir") args.outDir = argv[++i];
    else if (a === "--all") args.all = true;
    else if (a === "--only") args.only = argv[++i].split(",");
    else {
      throw new Error(`unknown argument '${a}'`);
    }
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  if (!args.runDir || (!args.all && !args.only)) {
    console.error(
      "usage: pmqs-figures --run-dir DIR (--all | --only NAME[,NAME...]) [--out-dir DIR]",
    );
    return 2;
  }
  const runDir = resolve(args.runDir);
  const outDir = resolve(args.outDir ?? join(runDir, "figures"));
  let figures: Figure[];
  try {
    figures = renderAll(runDir);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 3;
    }
    throw err;
  }
  if (args.only) {
    const wanted = new Set(args.only);
    figures = figures.filter((f) => wanted.has(f.name));
    const missing = [...wanted].filter(
      (name) => !figures.some((f) => f.name === name),
    );
    if (missing.length > 0) {
      console.error(`unknown figure names: ${missing.join(", ")}`);
      return 2;
    }
  }
  mkdirSync(outDir, { recursive: true });
  for (const fig of figures) {
    writeFileSync(join(outDir, `${fig.name}.svg`), fig.svg);
    const diag = Object.entries(fig.model.diagnostics)
      .map(([k, v]) => `${k}=${v}`)
      .join(" ");
    console.log(`wrote ${fig.name}.svg (${diag})`);
  }
  console.log(`rendered ${figures.length}/${STANDARD_SET.length} figures to ${outDir}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}

#!/usr/bin/env node
/** plot --spec <file> | plot --auto <results-dir> [--out <dir>] */

import { mkdirSync } from "node:fs";

import { EmptyCsvError, MissingColumnError } from "./csv.js";
import { autoSpecs, loadSpec, render } from "./render.js";

function usage(): never {
  console.error("usage: plot --spec <file> | plot --auto <results-dir> [--out <dir>]");
  process.exit(2);
}

export function main(argv: string[]): number {
  const args = argv[0] === "plot" ? argv.slice(1) : argv;
  let specPath: string | undefined;
  let autoDir: string | undefined;
  let outDir: string | undefined;
  for (let i = 0; i < args.length; i += 1) {
    switch (args[i]) {
      case "--spec":
        specPath = args[++i];
        break;
      case "--auto":
        autoDir = args[++i];
        break;
      case "--out":
        outDir = args[++i];
        break;
      default:
        usage();
    }
  }
  if ((specPath === undefined) === (autoDir === undefined)) {
    usage();
  }
  try {
    const specs = specPath !== undefined ? [loadSpec(specPath)] : autoSpecs(autoDir!, outDir);
    if (outDir) mkdirSync(outDir, { recursive: true });
    let allConsistent = true;
    for (const spec of specs) {
      const outcome = render(spec);
      const slopeInfo = Object.entries(outcome.slopes)
        .map(([k, v]) => `${k}: ${v.toFixed(3)}`)
        .join(", ");
      let flag = "";
      if (outcome.consistent) {
        const ok = Object.values(outcome.consistent).every(Boolean);
        allConsistent &&= ok;
        flag = ok ? " [verdict: ok]" : " [verdict: MISMATCH]";
      }
      console.log(`wrote ${outcome.output}` + (slopeInfo ? ` (${slopeInfo})` : "") + flag);
    }
    return allConsistent ? 0 : 1;
  } catch (err) {
    if (err instanceof MissingColumnError || err instanceof EmptyCsvError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

import { pathToFileURL } from "node:url";

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}

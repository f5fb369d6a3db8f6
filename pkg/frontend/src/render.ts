/** Figure assembly: CSV in, SVG out, slopes re-fit and checked
 * against the solver suite's verdict file.  This tool never computes
 * physics; it only re-fits the columns the CSVs already carry. */

import { readFileSync, writeFileSync, readdirSync, existsSync } from "node:fs";
import { basename, dirname, join } from "node:path";

import { numericColumn, readCsv, type Table } from "./csv.js";
import { logLogFit, leastSquares, type Fit } from "./fit.js";
import { renderFigure, type Series } from "./svg.js";

export const SLOPE_TOLERANCE = 1e-3;

export interface PlotSpec {
  csv: string;
  x: string;
  y: string;
  /** optional column whose distinct values split the rows into series */
  groupBy?: string;
  logX?: boolean;
  logY?: boolean;
  fitOverlay?: boolean;
  output: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
  /** verdict fit key, or a map group-value -> key when groupBy is set */
  verdictFit?: string | Record<string, string>;
  summary?: string;
}

export interface RenderOutcome {
  output: string;
  slopes: Record<string, number>;
  /** per-series agreement with the verdict file (absent: no verdict) */
  consistent?: Record<string, boolean>;
}

interface Verdict {
  fits: Record<string, { exponent: number }>;
}

export function loadSpec(path: string): PlotSpec {
  const doc = JSON.parse(readFileSync(path, "utf8")) as PlotSpec;
  for (const key of ["csv", "x", "y", "output"] as const) {
    if (!doc[key]) {
      throw new Error(`plot spec ${path} is missing "${key}"`);
    }
  }
  return doc;
}

function loadVerdict(spec: PlotSpec): Verdict | undefined {
  const summaryPath = spec.summary ?? join(dirname(spec.csv), "summary.json");
  if (!existsSync(summaryPath)) return undefined;
  const doc = JSON.parse(readFileSync(summaryPath, "utf8"));
  const name = basename(spec.csv).replace(/\.csv$/, "");
  const verdict = doc?.experiments?.[name];
  return verdict?.fits ? (verdict as Verdict) : undefined;
}

function splitSeries(table: Table, spec: PlotSpec): Array<{ key: string; idx: number[] }> {
  if (!spec.groupBy) {
    return [{ key: spec.y, idx: table.cells.get(spec.x)!.map((_, i) => i) }];
  }
  const groups = new Map<string, number[]>();
  const col = table.cells.get(spec.groupBy);
  if (col === undefined) {
    throw new Error(`column "${spec.groupBy}" not found in ${spec.csv}`);
  }
  col.forEach((v, i) => {
    if (!groups.has(v)) groups.set(v, []);
    groups.get(v)!.push(i);
  });
  return [...groups.entries()]
    .sort(([a], [b]) => {
      const na = Number(a);
      const nb = Number(b);
      if (Number.isFinite(na) && Number.isFinite(nb)) return na - nb;
      return a.localeCompare(b);
    })
    .map(([key, idx]) => ({ key: `${spec.groupBy}=${key}`, idx }));
}

export function render(spec: PlotSpec): RenderOutcome {
  const table = readCsv(spec.csv);
  const xsAll = numericColumn(table, spec.x, spec.csv);
  const ysAll = numericColumn(table, spec.y, spec.csv);
  const verdict = loadVerdict(spec);

  const series: Series[] = [];
  const slopes: Record<string, number> = {};
  const consistent: Record<string, boolean> = {};
  let sawVerdict = false;

  for (const { key, idx } of splitSeries(table, spec)) {
    const xs = idx.map((i) => xsAll[i]);
    const ys = idx.map((i) => ysAll[i]);
    const s: Series = { label: key, xs, ys };
    if (spec.fitOverlay ?? true) {
      let fit: Fit;
      if (spec.logX !== false && spec.logY !== false) {
        fit = logLogFit(xs, ys);
      } else {
        fit = leastSquares(xs, ys);
      }
      s.fit = fit;
      s.annotation = `slope ${fit.slope.toFixed(3)}`;
      slopes[key] = fit.slope;
      let fitKey: string | undefined;
      if (typeof spec.verdictFit === "string") {
        fitKey = spec.verdictFit;
      } else if (spec.verdictFit) {
        const raw = key.split("=").pop() ?? "";
        // the verdict keys use the shortest numeric form ("1", not "1.0")
        const canon = Number.isFinite(Number(raw)) ? String(Number(raw)) : raw;
        fitKey = spec.verdictFit[canon] ?? spec.verdictFit[raw];
      }
      const expected = fitKey ? verdict?.fits?.[fitKey]?.exponent : undefined;
      if (expected !== undefined) {
        sawVerdict = true;
        const ok = Math.abs(fit.slope - expected) <= SLOPE_TOLERANCE;
        consistent[key] = ok;
        s.flag = ok ? "green" : "red";
        s.annotation += ` (verdict ${expected.toFixed(3)})`;
      }
    }
    series.push(s);
  }

  const svg = renderFigure(series, {
    title: spec.title ?? basename(spec.csv),
    xLabel: spec.xLabel ?? spec.x,
    yLabel: spec.yLabel ?? spec.y,
    logX: spec.logX !== false,
    logY: spec.logY !== false,
  });
  writeFileSync(spec.output, svg);
  const outcome: RenderOutcome = { output: spec.output, slopes };
  if (sawVerdict) outcome.consistent = consistent;
  return outcome;
}

/** Default figure per known experiment CSV in a results directory. */
export function autoSpecs(resultsDir: string, outDir?: string): PlotSpec[] {
  const out = outDir ?? resultsDir;
  const specs: PlotSpec[] = [];
  const have = new Set(readdirSync(resultsDir).filter((f) => f.endsWith(".csv")));
  const add = (file: string, spec: Omit<PlotSpec, "csv" | "output">) => {
    if (have.has(file)) {
      specs.push({
        csv: join(resultsDir, file),
        output: join(out, file.replace(/\.csv$/, ".svg")),
        ...spec,
      });
    }
  };
  for (const name of ["modulated_scaling", "theorem0_preset"]) {
    add(`${name}.csv`, {
      x: "eps", y: "H_renorm", verdictFit: "H_renorm",
      title: `${name}: renormalized modulated energy`,
      xLabel: "eps", yLabel: "H_renorm(t*)",
    });
  }
  add("norm_inflation.csv", {
    x: "eps", y: "norm", groupBy: "sigma",
    verdictFit: { "0": "sigma_0", "0.5": "sigma_0.5", "1": "sigma_1", "1.0": "sigma_1" },
    title: "norm inflation: Sobolev norms at tau",
    xLabel: "eps", yLabel: "|u(tau)|_{H^sigma}",
  });
  add("bubble_norms.csv", {
    x: "x_ratio", y: "y_norm", groupBy: "branch",
    title: "bubble-norm power laws",
    xLabel: "scale ratio", yLabel: "normalized norm",
  });
  add("besov_vs_fourier.csv", {
    x: "fourier", y: "besov",
    title: "second-difference vs spectral Sobolev norm",
    xLabel: "Fourier-side norm", yLabel: "second-difference norm",
  });
  add("commutator_sweep.csv", {
    x: "R", y: "ratio", groupBy: "sigma", fitOverlay: false,
    title: "cutoff commutator ratio across radii",
    xLabel: "R", yLabel: "normalized commutator",
  });
  add("zero_speed_trace.csv", {
    x: "t", y: "support_radius", logX: false, logY: false, fitOverlay: false,
    title: "support radius along the run",
    xLabel: "t", yLabel: "support radius",
  });
  return specs;
}

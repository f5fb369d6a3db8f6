import { mkdtempSync, readFileSync, writeFileSync, copyFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { EmptyCsvError, MissingColumnError, readCsv } from "../src/csv.js";
import { autoSpecs, render, type PlotSpec } from "../src/render.js";

const FIXTURES = join(__dirname, "fixtures");

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "nlslab-plots-"));
}

describe("csv reader", () => {
  it("parses the solver output", () => {
    const table = readCsv(join(FIXTURES, "modulated_scaling.csv"));
    expect(table.columns).toContain("H_renorm");
    expect(table.rowCount).toBeGreaterThanOrEqual(4);
  });

  it("rejects an empty file", () => {
    const dir = tempDir();
    const p = join(dir, "empty.csv");
    writeFileSync(p, "a,b\n");
    expect(() => readCsv(p)).toThrow(EmptyCsvError);
  });
});

describe("render", () => {
  it("annotates an exact square law with slope 2.000", () => {
    const dir = tempDir();
    const csv = join(dir, "square.csv");
    writeFileSync(csv, "x,y\n1,1\n2,4\n4,16\n8,64\n");
    const out = join(dir, "square.svg");
    const outcome = render({ csv, x: "x", y: "y", output: out });
    expect(outcome.slopes["y"]).toBeCloseTo(2, 9);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("slope 2.000");
    expect(svg.startsWith("<svg")).toBe(true);
  });

  it("names a missing column", () => {
    const dir = tempDir();
    const csv = join(dir, "square.csv");
    writeFileSync(csv, "x,y\n1,1\n2,4\n");
    expect(() => render({ csv, x: "x", y: "nope", output: join(dir, "o.svg") }))
      .toThrow(MissingColumnError);
    try {
      render({ csv, x: "x", y: "nope", output: join(dir, "o.svg") });
    } catch (err) {
      expect(String(err)).toContain("nope");
    }
  });

  it("re-fits the solver CSV within 1e-3 of the verdict", () => {
    const dir = tempDir();
    copyFileSync(join(FIXTURES, "modulated_scaling.csv"), join(dir, "modulated_scaling.csv"));
    copyFileSync(join(FIXTURES, "summary.json"), join(dir, "summary.json"));
    const out = join(dir, "fig.svg");
    const outcome = render({
      csv: join(dir, "modulated_scaling.csv"),
      x: "eps",
      y: "H_renorm",
      verdictFit: "H_renorm",
      output: out,
    });
    expect(outcome.consistent).toBeDefined();
    expect(Object.values(outcome.consistent!)).toEqual([true]);
    const verdict = JSON.parse(readFileSync(join(dir, "summary.json"), "utf8"));
    const expected = verdict.experiments.modulated_scaling.fits.H_renorm.exponent;
    expect(Math.abs(outcome.slopes["H_renorm"] - expected)).toBeLessThanOrEqual(1e-3);
    expect(readFileSync(out, "utf8")).toContain("verdict");
  });

  it("flags a doctored verdict red", () => {
    const dir = tempDir();
    copyFileSync(join(FIXTURES, "modulated_scaling.csv"), join(dir, "modulated_scaling.csv"));
    const doc = JSON.parse(readFileSync(join(FIXTURES, "summary.json"), "utf8"));
    doc.experiments.modulated_scaling.fits.H_renorm.exponent += 0.5;
    writeFileSync(join(dir, "summary.json"), JSON.stringify(doc));
    const outcome = render({
      csv: join(dir, "modulated_scaling.csv"),
      x: "eps",
      y: "H_renorm",
      verdictFit: "H_renorm",
      output: join(dir, "fig.svg"),
    });
    expect(Object.values(outcome.consistent!)).toEqual([false]);
  });

  it("splits series on a group column", () => {
    const dir = tempDir();
    copyFileSync(join(FIXTURES, "norm_inflation.csv"), join(dir, "norm_inflation.csv"));
    copyFileSync(join(FIXTURES, "summary.json"), join(dir, "summary.json"));
    const outcome = render({
      csv: join(dir, "norm_inflation.csv"),
      x: "eps",
      y: "norm",
      groupBy: "sigma",
      verdictFit: { "0": "sigma_0", "0.5": "sigma_0.5", "1": "sigma_1" },
      output: join(dir, "fig.svg"),
    });
    expect(Object.keys(outcome.slopes)).toHaveLength(3);
    expect(Object.values(outcome.consistent!)).toEqual([true, true, true]);
  });
});

describe("autoSpecs", () => {
  it("builds one figure spec per known CSV", () => {
    const dir = tempDir();
    copyFileSync(join(FIXTURES, "modulated_scaling.csv"), join(dir, "modulated_scaling.csv"));
    copyFileSync(join(FIXTURES, "norm_inflation.csv"), join(dir, "norm_inflation.csv"));
    const specs = autoSpecs(dir);
    expect(specs.map((s) => s.csv.split("/").pop()).sort()).toEqual(
      ["modulated_scaling.csv", "norm_inflation.csv"],
    );
    for (const spec of specs) {
      const outcome = render(spec);
      expect(readFileSync(outcome.output, "utf8")).toContain("<svg");
    }
  });
});

/** Hand-rolled SVG scatter/line figures; no DOM, no canvas. */

import type { Fit } from "./fit.js";

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
  fit?: Fit;
  /** annotation next to the fitted line, e.g. "slope 2.000" */
  annotation?: string;
  /** consistency flag against the verdict file */
  flag?: "green" | "red";
}

export interface FigureOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  logY: boolean;
  width?: number;
  height?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 42, right: 24, bottom: 48, left: 64 };

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!(lo < hi)) {
    hi = lo + 1;
    lo -= 1;
  }
  return [lo, hi];
}

function ticks(lo: number, hi: number, count = 5): number[] {
  const out: number[] = [];
  for (let i = 0; i <= count; i += 1) {
    out.push(lo + ((hi - lo) * i) / count);
  }
  return out;
}

function fmtTick(v: number, log: boolean): string {
  const value = log ? Math.exp(v) : v;
  if (value !== 0 && (Math.abs(value) < 1e-2 || Math.abs(value) >= 1e4)) {
    return value.toExponential(1);
  }
  return String(Number(value.toPrecision(3)));
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export function renderFigure(series: Series[], opts: FigureOptions): string {
  const width = opts.width ?? 640;
  const height = opts.height ?? 440;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const tx = (v: number) => (opts.logX ? Math.log(v) : v);
  const ty = (v: number) => (opts.logY ? Math.log(v) : v);
  const allX = series.flatMap((s) => s.xs.map(tx)).filter(Number.isFinite);
  const allY = series.flatMap((s) => s.ys.map(ty)).filter(Number.isFinite);
  const [x0, x1] = extent(allX);
  const [y0, y1] = extent(allY);
  const px = (v: number) => MARGIN.left + ((v - x0) / (x1 - x0)) * plotW;
  const py = (v: number) => MARGIN.top + plotH - ((v - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `font-family="sans-serif" font-size="12">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="20" text-anchor="middle" font-size="15">${esc(opts.title)}</text>`,
  );

  for (const t of ticks(x0, x1)) {
    const x = px(t);
    parts.push(
      `<line x1="${x.toFixed(1)}" y1="${MARGIN.top}" x2="${x.toFixed(1)}" ` +
        `y2="${MARGIN.top + plotH}" stroke="#eee"/>`,
      `<text x="${x.toFixed(1)}" y="${MARGIN.top + plotH + 16}" text-anchor="middle">` +
        `${fmtTick(t, opts.logX)}</text>`,
    );
  }
  for (const t of ticks(y0, y1)) {
    const y = py(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y.toFixed(1)}" x2="${MARGIN.left + plotW}" ` +
        `y2="${y.toFixed(1)}" stroke="#eee"/>`,
      `<text x="${MARGIN.left - 6}" y="${(y + 4).toFixed(1)}" text-anchor="end">` +
        `${fmtTick(t, opts.logY)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#444"/>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" text-anchor="middle">` +
      `${esc(opts.xLabel)}</text>`,
    `<text transform="translate(16,${MARGIN.top + plotH / 2}) rotate(-90)" ` +
      `text-anchor="middle">${esc(opts.yLabel)}</text>`,
  );

  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    for (let i = 0; i < s.xs.length; i += 1) {
      const X = tx(s.xs[i]);
      const Y = ty(s.ys[i]);
      if (!Number.isFinite(X) || !Number.isFinite(Y)) continue;
      parts.push(
        `<circle cx="${px(X).toFixed(1)}" cy="${py(Y).toFixed(1)}" r="3.5" ` +
          `fill="${color}"/>`,
      );
    }
    if (s.fit) {
      const ya = s.fit.slope * x0 + s.fit.intercept;
      const yb = s.fit.slope * x1 + s.fit.intercept;
      parts.push(
        `<line x1="${px(x0).toFixed(1)}" y1="${py(ya).toFixed(1)}" ` +
          `x2="${px(x1).toFixed(1)}" y2="${py(yb).toFixed(1)}" ` +
          `stroke="${color}" stroke-dasharray="5,3"/>`,
      );
    }
    const labelY = MARGIN.top + 14 + 16 * idx;
    const flagColor = s.flag === "red" ? "#d62728" : "#2ca02c";
    const flagMark = s.flag ? ` <tspan fill="${flagColor}">&#9679;</tspan>` : "";
    const text = s.annotation ? `${esc(s.label)}: ${esc(s.annotation)}` : esc(s.label);
    parts.push(
      `<text x="${MARGIN.left + 8}" y="${labelY}" fill="${color}">${text}${flagMark}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}

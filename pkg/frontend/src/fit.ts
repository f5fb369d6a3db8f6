/** Least-squares slope of (log x, log y) or plain (x, y) series. */

export interface Fit {
  slope: number;
  intercept: number;
  rSquared: number;
}

export function leastSquares(xs: number[], ys: number[]): Fit {
  if (xs.length !== ys.length || xs.length < 2) {
    throw new Error(`need at least 2 matching points, got ${xs.length}`);
  }
  const n = xs.length;
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  let syy = 0;
  for (let i = 0; i < n; i += 1) {
    sxx += (xs[i] - mx) ** 2;
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) ** 2;
  }
  if (sxx === 0) {
    throw new Error("degenerate fit: all abscissae equal");
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  const rSquared = syy === 0 ? 1 : Math.min(1, Math.max(0, (sxy * sxy) / (sxx * syy)));
  return { slope, intercept, rSquared };
}

export function logLogFit(xs: number[], ys: number[]): Fit {
  const keep = xs
    .map((x, i) => [x, ys[i]] as const)
    .filter(([x, y]) => x > 0 && y > 0 && Number.isFinite(x) && Number.isFinite(y));
  if (keep.length < 2) {
    throw new Error("log-log fit needs at least 2 positive finite points");
  }
  return leastSquares(keep.map(([x]) => Math.log(x)), keep.map(([, y]) => Math.log(y)));
}

/** Least-squares fits shared by the figure annotations.
 *
 * The convergence slope intentionally re-implements the harness's rule so
 * the annotation is an independent recomputation from the CSV: plain
 * least squares on (log eps, log err); with more than four points the
 * largest eps is dropped when it deviates from the leave-one-out line by
 * more than three residual standard deviations (floored at 1e-6).
 */

export interface Line {
  slope: number;
  intercept: number;
}

export function linearFit(x: number[], y: number[]): Line {
  const n = x.length;
  if (n < 2) {
    throw new Error("linear fit needs at least two points");
  }
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

export interface RateFit extends Line {
  dropped: number | null;
}

export function loglogRate(eps: number[], err: number[]): RateFit {
  if (eps.length < 4) {
    throw new Error("rate fit requires at least 4 epsilon values");
  }
  const x = eps.map(Math.log);
  const y = err.map(Math.log);
  let fit = linearFit(x, y);
  let dropped: number | null = null;
  if (eps.length > 4) {
    const imax = eps.indexOf(Math.max(...eps));
    const keep = x.map((_, i) => i).filter((i) => i !== imax);
    const sub = linearFit(keep.map((i) => x[i]), keep.map((i) => y[i]));
    const resid = keep.map((i) => y[i] - (sub.slope * x[i] + sub.intercept));
    const mean = resid.reduce((a, b) => a + b, 0) / resid.length;
    const sigma = Math.max(
      Math.sqrt(resid.reduce((a, b) => a + (b - mean) * (b - mean), 0) / resid.length),
      1e-6,
    );
    const dev = Math.abs(y[imax] - (sub.slope * x[imax] + sub.intercept));
    if (dev > 3 * sigma) {
      dropped = eps[imax];
      fit = sub;
    }
  }
  return { ...fit, dropped };
}

/** Fit log(sqrt(t) * norm) = logC - sigma t; returns the envelope line. */
export function decayEnvelope(t: number[], norm: number[]): { sigma: number; logC: number } {
  const pairs = t
    .map((ti, i) => [ti, norm[i]] as const)
    .filter(([, ni]) => ni > 0);
  const fit = linearFit(
    pairs.map(([ti]) => ti),
    pairs.map(([ti, ni]) => Math.log(Math.sqrt(ti) * ni)),
  );
  return { sigma: -fit.slope, logC: fit.intercept };
}

/** The four figure kinds rendered from laboratory CSV artifacts.
 *
 * Pure view layer: every number shown is recomputed from the CSV input
 * (the convergence slope annotation in particular is an independent
 * refit, not read from the JSON manifest).
 */

import { Table, column, rawColumn } from "./csv.js";
import { decayEnvelope, linearFit, loglogRate } from "./fit.js";
import { PALETTE, Plot, bounds } from "./svg.js";

export type FigureKind = "branches" | "convergence" | "decay" | "acoustic";

/** Eigenvalue branches in the complex plane, one color per branch. */
export function renderBranches(table: Table): string {
  const j = rawColumn(table, "j");
  const re = column(table, "re_lambda");
  const im = column(table, "im_lambda");
  const xi = column(table, "xi");
  const labels = [...new Set(j)].sort();
  const [xmin, xmax] = bounds(re, "linear");
  const [ymin, ymax] = bounds(im, "linear");
  const plot = new Plot(
    { min: xmin, max: xmax, scale: "linear", label: "Re lambda" },
    { min: ymin, max: ymax, scale: "linear", label: "Im lambda" },
    "symbol eigenvalue branches",
  );
  const legend: Array<[string, string]> = [];
  labels.forEach((lab, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const rows = j
      .map((v, i) => [v, i] as const)
      .filter(([v]) => v === lab)
      .map(([, i]) => i)
      .sort((a, b) => xi[a] - xi[b]);
    plot.polyline(rows.map((i) => re[i]), rows.map((i) => im[i]), color, 1.2);
    plot.markers(rows.map((i) => re[i]), rows.map((i) => im[i]), color, 2.0);
    legend.push([`branch ${lab}`, color]);
  });
  plot.legend(legend);
  plot.annotate(`max Re lambda = ${Math.max(...re).toExponential(2)}`);
  return plot.render();
}

/** Log-log convergence plot with the refitted rate annotated. */
export function renderConvergence(table: Table): { svg: string; slope: number } {
  const eps = column(table, "eps");
  const err = column(table, "sup_error");
  const fit = loglogRate(eps, err);
  const [xmin, xmax] = bounds(eps, "log");
  const [ymin, ymax] = bounds(err, "log");
  const plot = new Plot(
    { min: xmin, max: xmax, scale: "log", label: "eps" },
    { min: ymin, max: ymax, scale: "log", label: "sup_t error" },
    "convergence to the limit system",
  );
  const order = eps.map((_, i) => i).sort((a, b) => eps[a] - eps[b]);
  const line = order.map((i) => Math.exp(fit.intercept + fit.slope * Math.log(eps[i])));
  plot.polyline(order.map((i) => eps[i]), line, "#888", 1.0, "6,4");
  plot.markers(order.map((i) => eps[i]), order.map((i) => err[i]), PALETTE[0]);
  plot.annotate(`slope = ${fit.slope.toFixed(3)}`);
  if (fit.dropped !== null) {
    plot.annotate(`dropped eps = ${fit.dropped}`, 0.05, 0.16);
  }
  return { svg: plot.render(), slope: fit.slope };
}

/** Semilog decay samples per eps with fitted C e^{-sigma t}/sqrt(t) envelopes. */
export function renderDecay(table: Table): string {
  const eps = column(table, "eps");
  const t = column(table, "t");
  const norm = column(table, "norm");
  const groups = [...new Set(eps)].sort((a, b) => b - a);
  const [xmin, xmax] = bounds(t, "linear");
  const positive = norm.filter((v) => v > 0);
  if (positive.length === 0) {
    throw new Error("decay table has no positive samples");
  }
  const [ymin, ymax] = bounds(positive, "log");
  const plot = new Plot(
    { min: xmin, max: xmax, scale: "linear", label: "t" },
    { min: ymin, max: ymax, scale: "log", label: "||W(t) f||" },
    "off-equilibrium decay with fitted envelopes",
  );
  const legend: Array<[string, string]> = [];
  groups.forEach((e, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const rows = eps
      .map((v, i) => [v, i] as const)
      .filter(([v]) => v === e)
      .map(([, i]) => i)
      .sort((a, b) => t[a] - t[b]);
    const ts = rows.map((i) => t[i]);
    const ns = rows.map((i) => norm[i]);
    plot.markers(ts, ns, color, 2.5);
    const env = decayEnvelope(ts, ns);
    const envVals = ts.map((ti) => Math.exp(env.logC - env.sigma * ti) / Math.sqrt(ti));
    plot.polyline(ts, envVals, color, 1.0, "4,3");
    legend.push([`eps=${e}  sigma=${env.sigma.toFixed(4)}`, color]);
  });
  plot.legend(legend);
  return plot.render();
}

/** Fitted acoustic frequencies against the predicted c |xi| / eps. */
export function renderAcoustic(table: Table): string {
  const fitted = column(table, "fitted_freq");
  const predicted = column(table, "predicted_freq");
  const eps = column(table, "eps");
  const lo = Math.min(...predicted, ...fitted);
  const hi = Math.max(...predicted, ...fitted);
  const [mn, mx] = bounds([lo, hi], "log");
  const plot = new Plot(
    { min: mn, max: mx, scale: "log", label: "predicted c|xi|/eps" },
    { min: mn, max: mx, scale: "log", label: "fitted frequency" },
    "acoustic oscillation frequency scaling",
  );
  plot.polyline([mn, mx], [mn, mx], "#888", 1.0, "6,4");
  const groups = [...new Set(eps)].sort((a, b) => b - a);
  const legend: Array<[string, string]> = [];
  groups.forEach((e, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const rows = eps
      .map((v, i) => [v, i] as const)
      .filter(([v]) => v === e)
      .map(([, i]) => i);
    plot.markers(rows.map((i) => predicted[i]), rows.map((i) => fitted[i]), color);
    legend.push([`eps=${e}`, color]);
  });
  const relErr = fitted.map((f, i) => Math.abs(f - predicted[i]) / predicted[i]);
  plot.annotate(`max rel error = ${Math.max(...relErr).toExponential(2)}`);
  plot.legend(legend);
  return plot.render();
}

export function render(kind: FigureKind, table: Table): string {
  switch (kind) {
    case "branches":
      return renderBranches(table);
    case "convergence":
      return renderConvergence(table).svg;
    case "decay":
      return renderDecay(table);
    case "acoustic":
      return renderAcoustic(table);
    default: {
      const never: never = kind;
      throw new Error(`unknown figure kind ${String(never)}`);
    }
  }
}

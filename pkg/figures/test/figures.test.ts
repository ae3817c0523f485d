import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { column, parseCsv } from "../src/csv.js";
import {
  render,
  renderAcoustic,
  renderBranches,
  renderConvergence,
  renderDecay,
} from "../src/figures.js";

// fixtures are verbatim artifacts of an acceptance-configuration run of
// the laboratory CLI (hard spheres, d=2, K=6, 32^2 modes)
function fixture(name: string): string {
  return readFileSync(
    fileURLToPath(new URL(`../../test/fixtures/${name}`, import.meta.url)),
    "utf8",
  );
}

test("convergence slope is reproduced from the CSV alone", () => {
  const table = parseCsv(fixture("converge_2_6_32.csv"));
  const { svg, slope } = renderConvergence(table);
  const manifest = JSON.parse(fixture("converge_2_6_32.json"));
  // three-decimal agreement with the independently fitted harness slope
  assert.equal(slope.toFixed(3), manifest.slope.toFixed(3));
  assert.ok(Math.abs(slope - manifest.slope) < 1e-9);
  assert.ok(svg.includes(`slope = ${manifest.slope.toFixed(3)}`));
});

test("branch figure renders all four branches in the stable half plane", () => {
  const table = parseCsv(fixture("branches_2_6_32.csv"));
  const re = column(table, "re_lambda");
  assert.ok(Math.max(...re) <= 1e-10);
  const svg = renderBranches(table);
  for (const j of ["1", "2", "3", "4"]) {
    assert.ok(svg.includes(`branch ${j}`));
  }
  assert.ok(svg.startsWith("<svg"));
});

test("decay figure renders an envelope per eps", () => {
  const table = parseCsv(fixture("decay_2_6_32_w.csv"));
  const svg = renderDecay(table);
  const manifest = JSON.parse(fixture("decay_2_6_32.json"));
  for (const sigma of Object.values<number>(manifest.w_sigma)) {
    assert.ok(sigma > 0);
    assert.ok(svg.includes(`sigma=${sigma.toFixed(4)}`));
  }
});

test("acoustic figure annotates the worst relative error", () => {
  const table = parseCsv(fixture("illprepared_2_6_32.csv"));
  const svg = renderAcoustic(table);
  const manifest = JSON.parse(fixture("illprepared_2_6_32.json"));
  assert.ok(manifest.max_rel_error <= 0.05);
  assert.ok(svg.includes("max rel error"));
});

test("all four kinds render without error on the acceptance outputs", () => {
  const inputs = {
    branches: "branches_2_6_32.csv",
    convergence: "converge_2_6_32.csv",
    decay: "decay_2_6_32_w.csv",
    acoustic: "illprepared_2_6_32.csv",
  } as const;
  for (const [kind, name] of Object.entries(inputs)) {
    const svg = render(kind as keyof typeof inputs, parseCsv(fixture(name)));
    assert.ok(svg.startsWith("<svg"));
    assert.ok(svg.trimEnd().endsWith("</svg>"));
  }
});

test("rendering is deterministic", () => {
  const table = parseCsv(fixture("converge_2_6_32.csv"));
  const a = renderConvergence(table).svg;
  const b = renderConvergence(table).svg;
  assert.equal(a, b);
});

test("figures refuse tables with the wrong columns", () => {
  const table = parseCsv("a,b\n1,2\n");
  assert.throws(() => renderConvergence(table), /missing column 'eps'/);
  assert.throws(() => renderBranches(table), /missing column/);
  assert.throws(() => renderDecay(table), /missing column/);
  assert.throws(() => renderAcoustic(table), /missing column/);
});

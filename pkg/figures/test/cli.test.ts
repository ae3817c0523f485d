import assert from "node:assert/strict";
import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

const cliPath = fileURLToPath(new URL("../src/cli.js", import.meta.url));
const fixturesDir = fileURLToPath(new URL("../../test/fixtures", import.meta.url));

function runCli(args: string[]): { code: number; stderr: string } {
  try {
    execFileSync(process.execPath, [cliPath, ...args], { stdio: "pipe" });
    return { code: 0, stderr: "" };
  } catch (err) {
    const e = err as { status?: number; stderr?: Buffer };
    return { code: e.status ?? -1, stderr: e.stderr?.toString() ?? "" };
  }
}

test("cli renders a convergence figure end to end", () => {
  const dir = mkdtempSync(join(tmpdir(), "figs-"));
  const out = join(dir, "conv.svg");
  const res = runCli(["convergence", join(fixturesDir, "converge_2_6_32.csv"), out]);
  assert.equal(res.code, 0);
  const svg = readFileSync(out, "utf8");
  assert.ok(svg.includes("slope ="));
});

test("cli fails with a nonzero exit on empty CSV", () => {
  const dir = mkdtempSync(join(tmpdir(), "figs-"));
  const empty = join(dir, "empty.csv");
  writeFileSync(empty, "");
  const res = runCli(["convergence", empty, join(dir, "out.svg")]);
  assert.equal(res.code, 1);
  assert.match(res.stderr, /empty CSV/);
});

test("cli names a missing column", () => {
  const dir = mkdtempSync(join(tmpdir(), "figs-"));
  const bad = join(dir, "bad.csv");
  writeFileSync(bad, "foo,bar\n1,2\n");
  const res = runCli(["acoustic", bad, join(dir, "out.svg")]);
  assert.equal(res.code, 1);
  assert.match(res.stderr, /missing column 'fitted_freq'/);
});

test("cli rejects unknown kinds and bad usage", () => {
  assert.equal(runCli(["sparkline", "x.csv", "y.svg"]).code, 1);
  assert.equal(runCli(["convergence"]).code, 1);
  assert.equal(runCli(["convergence", "/nonexistent.csv", "/tmp/o.svg"]).code, 1);
});

import assert from "node:assert/strict";
import { test } from "node:test";

import { column, parseCsv, rawColumn } from "../src/csv.js";

test("parses plain tables", () => {
  const t = parseCsv("a,b\n1,2\n3,4\n");
  assert.deepEqual(t.header, ["a", "b"]);
  assert.deepEqual(column(t, "b"), [2, 4]);
});

test("handles quoted fields with commas and escaped quotes", () => {
  const t = parseCsv('name,v\n"x, y",1\n"say ""hi""",2\n');
  assert.deepEqual(rawColumn(t, "name"), ["x, y", 'say "hi"']);
});

test("empty input raises", () => {
  assert.throws(() => parseCsv(""), /empty CSV/);
  assert.throws(() => parseCsv("a,b\n"), /empty CSV/);
});

test("missing column is named in the error", () => {
  const t = parseCsv("a,b\n1,2\n");
  assert.throws(() => column(t, "frequency"), /missing column 'frequency'/);
});

test("non-numeric cells are rejected for numeric columns", () => {
  const t = parseCsv("a\nnot-a-number\n");
  assert.throws(() => column(t, "a"), /non-numeric/);
});

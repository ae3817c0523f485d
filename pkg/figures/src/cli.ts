#!/usr/bin/env node
/** Standalone figure renderer: kinlab-figures <kind> <input.csv> <output.svg> */

import { readFileSync, writeFileSync } from "node:fs";
import { parseCsv } from "./csv.js";
import { FigureKind, render } from "./figures.js";

const KINDS: FigureKind[] = ["branches", "convergence", "decay", "acoustic"];

export function main(argv: string[]): number {
  if (argv.length !== 3) {
    process.stderr.write(
      "usage: kinlab-figures <branches|convergence|decay|acoustic> <input.csv> <output.svg>\n",
    );
    return 1;
  }
  const [kind, input, output] = argv;
  if (!KINDS.includes(kind as FigureKind)) {
    process.stderr.write(`error: unknown figure kind '${kind}' (${KINDS.join(", ")})\n`);
    return 1;
  }
  let text: string;
  try {
    text = readFileSync(input, "utf8");
  } catch (err) {
    process.stderr.write(`error: cannot read ${input}: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const table = parseCsv(text);
    writeFileSync(output, render(kind as FigureKind, table));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

if (process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!)) {
  process.exit(main(process.argv.slice(2)));
}

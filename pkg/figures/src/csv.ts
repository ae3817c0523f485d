/** Minimal RFC-4180 CSV reader for the laboratory's result tables. */

export interface Table {
  header: string[];
  rows: string[][];
}

/** Parse CSV text (quoted fields, embedded commas/newlines supported). */
export function parseCsv(text: string): Table {
  const records: string[][] = [];
  let field = "";
  let record: string[] = [];
  let inQuotes = false;
  let i = 0;
  const pushField = () => {
    record.push(field);
    field = "";
  };
  const pushRecord = () => {
    pushField();
    records.push(record);
    record = [];
  };
  while (i < text.length) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i += 1;
        continue;
      }
      field += ch;
      i += 1;
      continue;
    }
    if (ch === '"') {
      inQuotes = true;
      i += 1;
    } else if (ch === ",") {
      pushField();
      i += 1;
    } else if (ch === "\r") {
      i += 1;
    } else if (ch === "\n") {
      pushRecord();
      i += 1;
    } else {
      field += ch;
      i += 1;
    }
  }
  if (field.length > 0 || record.length > 0) {
    pushRecord();
  }
  const nonEmpty = records.filter((r) => r.length > 1 || r[0] !== "");
  if (nonEmpty.length === 0) {
    throw new Error("empty CSV");
  }
  const [header, ...rows] = nonEmpty;
  if (rows.length === 0) {
    throw new Error("empty CSV (header only)");
  }
  return { header, rows };
}

/** Numeric column accessor; raises naming the column when absent. */
export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(
      `missing column '${name}' (have: ${table.header.join(", ")})`,
    );
  }
  return table.rows.map((r, k) => {
    const v = Number(r[idx]);
    if (!Number.isFinite(v)) {
      throw new Error(`non-numeric value in column '${name}' at row ${k + 1}`);
    }
    return v;
  });
}

/** String column accessor with the same missing-column diagnostics. */
export function rawColumn(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(
      `missing column '${name}' (have: ${table.header.join(", ")})`,
    );
  }
  return table.rows.map((r) => r[idx]);
}

import { readFileSync } from "fs";
import Papa from "papaparse";

export type Row = Record<string, number | string>;

/**
 * Load a CSV whose header must match the expected columns exactly.
 * The column sets are fixed by the gwprune CLI contract; anything else is a
 * schema mismatch and fails loudly.
 */
export function loadCsv(path: string, columns: string[]): Row[] {
  const text = readFileSync(path, "utf8").trim();
  const parsed = Papa.parse<Row>(text, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`CSV parse error in ${path}: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  const want = columns.join(",");
  const got = fields.join(",");
  if (want !== got) {
    throw new Error(
      `schema mismatch in ${path}: expected columns [${want}], found [${got}]`
    );
  }
  if (parsed.data.length === 0) {
    throw new Error(`no data rows in ${path}`);
  }
  return parsed.data;
}

export function numbers(rows: Row[], column: string): number[] {
  return rows.map((r) => {
    const v = r[column];
    if (typeof v !== "number" || !isFinite(v)) {
      throw new Error(`non-numeric value ${String(v)} in column ${column}`);
    }
    return v;
  });
}

/**
 * Strict CSV reading for run-directory artifacts.
 *
 * The producing side never quotes fields, so parsing is a plain split;
 * every artifact declares its expected header and any mismatch is
 * reported with the offending column name.
 */

import { readFileSync } from "fs";

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new SchemaError(`${path}: artifact not found`);
  }
  text = text.replace(/\n+$/, "");
  const lines = text.split("\n");
  if (lines.length === 0 || lines[0] === "") {
    throw new SchemaError(`${path}: empty artifact`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  for (const [i, row] of rows.entries()) {
    if (row.length !== header.length) {
      throw new SchemaError(
        `${path}: row ${i + 2} has ${row.length} fields, expected ${header.length}`,
      );
    }
  }
  return { header, rows };
}

export function requireColumns(
  path: string,
  table: Table,
  expected: string[],
): void {
  for (const col of expected) {
    if (!table.header.includes(col)) {
      throw new SchemaError(`${path}: missing column '${col}'`);
    }
  }
  for (const col of table.header) {
    if (!expected.includes(col)) {
      throw new SchemaError(`${path}: unexpected column '${col}'`);
    }
  }
}

export function numericColumn(
  path: string,
  table: Table,
  name: string,
): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new SchemaError(`${path}: missing column '${name}'`);
  return table.rows.map((row, i) => {
    const v = Number(row[idx]);
    if (!Number.isFinite(v)) {
      throw new SchemaError(
        `${path}: column '${name}' row ${i + 2} is not numeric: '${row[idx]}'`,
      );
    }
    return v;
  });
}

export function stringColumn(
  path: string,
  table: Table,
  name: string,
): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new SchemaError(`${path}: missing column '${name}'`);
  return table.rows.map((row) => row[idx]);
}

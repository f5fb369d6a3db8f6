/** Minimal reader for the numeric CSVs the solver suite emits. */

import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  /** column name -> raw string cells, row-aligned */
  cells: Map<string, string[]>;
  rowCount: number;
}

export class MissingColumnError extends Error {
  constructor(public column: string, public path: string) {
    super(`column "${column}" not found in ${path}`);
  }
}

export class EmptyCsvError extends Error {
  constructor(public path: string) {
    super(`${path} has no data rows`);
  }
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8").trim();
  const lines = text.length > 0 ? text.split(/\r?\n/) : [];
  if (lines.length < 2) {
    throw new EmptyCsvError(path);
  }
  const columns = lines[0].split(",");
  const cells = new Map<string, string[]>(columns.map((c) => [c, []]));
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    columns.forEach((c, i) => cells.get(c)!.push(parts[i] ?? ""));
  }
  return { columns, cells, rowCount: lines.length - 1 };
}

export function numericColumn(table: Table, column: string, path: string): number[] {
  const raw = table.cells.get(column);
  if (raw === undefined) {
    throw new MissingColumnError(column, path);
  }
  return raw.map((v) => Number(v));
}

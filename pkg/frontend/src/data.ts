/**
 * Readers for the experiment result tables (bias.csv, variance.csv,
 * fit.json). Strictly read-only: parse, validate, hand back typed rows.
 */

import { readFileSync } from "fs";
import Papa from "papaparse";

export class SchemaError extends Error {}

export interface BiasRow {
  lag: number;
  mean_estimate: number;
  abs_bias: number;
  log_abs_bias: number;
  se_mean: number;
  n_runs: number;
}

export interface VarianceRow {
  lag: number;
  var_joint: number;
  var_independent: number; // NaN when the split-stream run was not enabled
  n_runs: number;
}

export interface Fit {
  slope: number;
  intercept: number;
  fit_lags: number[];
  r2: number;
}

const BIAS_COLUMNS = ["lag", "mean_estimate", "abs_bias", "log_abs_bias", "se_mean", "n_runs"];
const VARIANCE_COLUMNS = ["lag", "var_joint", "var_independent", "n_runs"];

function parseTable(path: string, columns: string[]): Record<string, number>[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), { header: true, skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${path}: ${parsed.errors[0].message} (row ${parsed.errors[0].row})`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const col of columns) {
    if (!fields.includes(col)) {
      throw new SchemaError(`${path}: missing column '${col}' (found: ${fields.join(", ") || "none"})`);
    }
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return parsed.data.map((row, i) => {
    const out: Record<string, number> = {};
    for (const col of columns) {
      // Number() round-trips the 17-significant-digit serialization; "nan" maps to NaN
      const value = Number(row[col]);
      if (row[col] !== "nan" && Number.isNaN(value)) {
        throw new SchemaError(`${path}: row ${i + 1}, column '${col}': not a number: '${row[col]}'`);
      }
      out[col] = value;
    }
    return out;
  });
}

export function readBiasCsv(path: string): BiasRow[] {
  const rows = parseTable(path, BIAS_COLUMNS) as unknown as BiasRow[];
  return rows.sort((a, b) => a.lag - b.lag);
}

export function readVarianceCsv(path: string): VarianceRow[] {
  const rows = parseTable(path, VARIANCE_COLUMNS) as unknown as VarianceRow[];
  return rows.sort((a, b) => a.lag - b.lag);
}

export function readFitJson(path: string): Fit | null {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new SchemaError(`${path}: ${(err as Error).message}`);
  }
  if (doc === null) return null; // experiment had no usable fit range
  const fit = doc as Partial<Fit>;
  if (typeof fit.slope !== "number" || typeof fit.intercept !== "number" || !Array.isArray(fit.fit_lags)) {
    throw new SchemaError(`${path}: expected {slope, intercept, fit_lags, ...}`);
  }
  return fit as Fit;
}

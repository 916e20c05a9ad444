/** Readers for the campaign artifacts (CSV records, summary JSON). */

import { readFileSync } from 'fs';
import Papa from 'papaparse';

export interface EpsRow {
  eps: number;
  mean_tau: number;
  lambda?: number;
}

export interface ExitSummary {
  kind: string;
  preset: string | null;
  alpha: number;
  eps_grid: number[];
  per_eps: Array<{
    eps: number;
    lambda_theory: number;
    mean_tau: number;
    ks_stat: number;
    ks_p: number;
    [k: string]: unknown;
  }>;
  slope: number | null;
}

export interface LocusSummary {
  kind: string;
  preset: string | null;
  per_eps: Array<{
    eps: number;
    sets: Array<{ name: string; empirical: number | null; theory: number }>;
  }>;
  theory_ratios: Record<string, number>;
}

export function readJson<T>(path: string): T {
  return JSON.parse(readFileSync(path, 'utf8')) as T;
}

function parseCsv(path: string): Record<string, string>[] {
  const text = readFileSync(path, 'utf8');
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length) {
    throw new Error(`CSV parse failure in ${path}: ${parsed.errors[0].message}`);
  }
  return parsed.data;
}

/** Per-epsilon mean exit times from either an aggregated table
 * (columns eps, mean_tau) or a raw records file (exit_records.csv schema,
 * censored rows excluded). */
export function readScalingTable(path: string): EpsRow[] {
  const rows = parseCsv(path);
  if (rows.length === 0) throw new Error(`no rows in ${path}`);
  const cols = Object.keys(rows[0]);
  if (cols.includes('mean_tau')) {
    return rows.map((r) => ({
      eps: parseFloat(r.eps),
      mean_tau: parseFloat(r.mean_tau),
      lambda: r.lambda !== undefined ? parseFloat(r.lambda) : undefined,
    }));
  }
  if (cols.includes('tau') && cols.includes('epsilon')) {
    const byEps = new Map<number, number[]>();
    for (const r of rows) {
      if (r.censored === 'True' || r.tau === '') continue;
      const eps = parseFloat(r.epsilon);
      if (!byEps.has(eps)) byEps.set(eps, []);
      byEps.get(eps)!.push(parseFloat(r.tau));
    }
    return [...byEps.entries()]
      .map(([eps, taus]) => ({
        eps,
        mean_tau: taus.reduce((a, b) => a + b, 0) / taus.length,
      }))
      .sort((a, b) => b.eps - a.eps);
  }
  throw new Error(`unrecognized scaling input schema in ${path}: ${cols.join(',')}`);
}

export interface NormalizedSample {
  value: number;
}

/** Non-censored normalized exit times from a records file. */
export function readNormalizedTaus(path: string): number[] {
  const rows = parseCsv(path);
  const out: number[] = [];
  let censored = 0;
  for (const r of rows) {
    if (r.censored === 'True' || r.tau_normalized === '') {
      censored += 1;
      continue;
    }
    out.push(parseFloat(r.tau_normalized));
  }
  if (rows.length === 0) throw new Error(`no rows in ${path}`);
  if (out.length === 0) {
    throw new Error(censored > 0 ? `only censored rows in ${path}` : `no usable rows in ${path}`);
  }
  return out;
}

export interface OccupancySeries {
  t: number[];
  fractions: number[][]; // [time][state]
  stateNames: string[];
}

export function readOccupancy(path: string): OccupancySeries {
  const rows = parseCsv(path);
  if (rows.length === 0) throw new Error(`no rows in ${path}`);
  const cols = Object.keys(rows[0]).filter((c) => c.startsWith('fraction_state'));
  if (cols.length === 0) throw new Error(`no occupancy columns in ${path}`);
  return {
    t: rows.map((r) => parseFloat(r.t_rescaled)),
    fractions: rows.map((r) => cols.map((c) => parseFloat(r[c]))),
    stateNames: cols.map((c) => c.replace('fraction_state', 'state ')),
  };
}

/** Ordinary least squares on (x, y); returns [slope, intercept]. */
export function olsFit(x: number[], y: number[]): [number, number] {
  const n = x.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) ** 2;
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const slope = sxy / sxx;
  return [slope, my - slope * mx];
}

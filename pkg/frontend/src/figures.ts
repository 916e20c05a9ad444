/**
 * The four figure kinds, each a pure function from input paths to an SVG
 * string.  Figures only consume persisted campaign artifacts; the one
 * computation they own is the presentation-level regression behind the
 * slope annotation of the scaling figure.
 */

import { Figure } from './svg';
import {
  EpsRow,
  ExitSummary,
  LocusSummary,
  olsFit,
  readJson,
  readNormalizedTaus,
  readOccupancy,
  readScalingTable,
} from './data';

const COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#8c564b'];

function scalingRows(inputs: string[]): { rows: EpsRow[]; preset: string | null } {
  const rows: EpsRow[] = [];
  let preset: string | null | undefined;
  for (const path of inputs) {
    if (path.endsWith('.json')) {
      const s = readJson<ExitSummary>(path);
      if (preset === undefined) preset = s.preset ?? null;
      else if ((s.preset ?? null) !== preset) {
        throw new Error(`mixed presets in one figure: ${preset} vs ${s.preset}`);
      }
      for (const row of s.per_eps) {
        rows.push({ eps: row.eps, mean_tau: row.mean_tau, lambda: row.lambda_theory });
      }
    } else {
      rows.push(...readScalingTable(path));
      if (preset === undefined) preset = null;
    }
  }
  rows.sort((a, b) => b.eps - a.eps);
  return { rows, preset: preset ?? null };
}

/** Log-log mean exit time against 1/eps with fitted slope and, when the
 * input provides rates, the theory line 1/lambda. */
export function makeScalingFigure(inputs: string[]): { svg: string; slope: number } {
  const { rows } = scalingRows(inputs);
  if (rows.length < 3) {
    throw new Error(`scaling figure needs at least 3 epsilon points, got ${rows.length}`);
  }
  const x = rows.map((r) => 1.0 / r.eps);
  const y = rows.map((r) => r.mean_tau);
  const [slope, intercept] = olsFit(x.map(Math.log), y.map(Math.log));

  const fig = new Figure();
  const pad = 1.35;
  const xs = fig.xScale([Math.min(...x) / pad, Math.max(...x) * pad], true);
  const allY = y.concat(rows.filter((r) => r.lambda).map((r) => 1.0 / (r.lambda as number)));
  const ys = fig.yScale([Math.min(...allY) / pad, Math.max(...allY) * pad], true);
  fig.axes(xs, ys, '1/eps', 'mean exit time', 'Exit-time scaling');

  const fitPts: Array<[number, number]> = x.map((xi) => [
    xs.apply(xi),
    ys.apply(Math.exp(intercept + slope * Math.log(xi))),
  ]);
  fig.path(fitPts, '#888', 1.2, '5,4');
  const theory = rows.filter((r) => r.lambda !== undefined);
  if (theory.length >= 2) {
    fig.path(
      theory.map((r) => [xs.apply(1 / r.eps), ys.apply(1 / (r.lambda as number))]),
      COLORS[1],
      1.4,
    );
    fig.text(fig.innerRight - 6, fig.innerTop + 30, 'theory 1/rate', {
      anchor: 'end',
      fill: COLORS[1],
      size: 11,
    });
  }
  for (let i = 0; i < rows.length; i++) fig.circle(xs.apply(x[i]), ys.apply(y[i]));
  fig.text(fig.innerRight - 6, fig.innerTop + 14, `slope = ${slope.toFixed(3)}`, {
    anchor: 'end',
    size: 12,
  });
  return { svg: fig.render(), slope };
}

/** Histogram of normalized exit times with the unit-rate exponential
 * density overlay; KS annotation comes from the summary when provided. */
export function makeExitHistogram(recordsCsv: string, summaryJson?: string): string {
  const samples = readNormalizedTaus(recordsCsv);
  let ks: { stat: number; p: number } | null = null;
  let preset: string | null = null;
  if (summaryJson) {
    const s = readJson<ExitSummary>(summaryJson);
    preset = s.preset ?? null;
    const rows = s.per_eps;
    const last = rows[rows.length - 1];
    ks = { stat: last.ks_stat, p: last.ks_p };
  }
  const hi = Math.max(6.0, quantile(samples, 0.995));
  const nBins = 40;
  const w = hi / nBins;
  const counts = new Array(nBins).fill(0);
  for (const v of samples) {
    const b = Math.min(Math.floor(v / w), nBins - 1);
    counts[b] += 1;
  }
  const density = counts.map((c) => c / (samples.length * w));

  const fig = new Figure();
  const xs = fig.xScale([0, hi]);
  const ys = fig.yScale([0, Math.max(...density, 1.0) * 1.1]);
  const title = preset ? `Normalized exit law (${preset})` : 'Normalized exit law';
  fig.axes(xs, ys, 'rate * exit time', 'density', title);
  for (let b = 0; b < nBins; b++) {
    const x0 = xs.apply(b * w);
    const x1 = xs.apply((b + 1) * w);
    const y = ys.apply(density[b]);
    fig.rect(x0, y, x1 - x0 - 0.5, fig.innerBottom - y, COLORS[0], 0.65);
  }
  const overlay: Array<[number, number]> = [];
  for (let i = 0; i <= 200; i++) {
    const t = (hi * i) / 200;
    overlay.push([xs.apply(t), ys.apply(Math.exp(-t))]);
  }
  fig.path(overlay, COLORS[1], 1.8);
  fig.text(fig.innerRight - 6, fig.innerTop + 14, `n = ${samples.length}`, {
    anchor: 'end',
    size: 11,
  });
  if (ks) {
    fig.text(
      fig.innerRight - 6,
      fig.innerTop + 30,
      `KS = ${ks.stat.toFixed(4)}, p = ${ks.p.toFixed(3)}`,
      { anchor: 'end', size: 11 },
    );
  }
  return fig.render();
}

/** Exit-locus frequencies per test set against the limit-measure ratios. */
export function makeLocusHistogram(summaryJson: string): string {
  const s = readJson<LocusSummary>(summaryJson);
  const last = s.per_eps[s.per_eps.length - 1];
  const sets = last.sets;
  if (!sets || sets.length === 0) throw new Error('locus summary has no test sets');

  const fig = new Figure();
  const xs = fig.xScale([0, sets.length]);
  const maxVal = Math.max(...sets.map((t) => Math.max(t.empirical ?? 0, t.theory)));
  const ys = fig.yScale([0, Math.max(1.0, maxVal * 1.15)]);
  fig.axes(xs, ys, 'test set', 'exit frequency', `Exit locus (eps = ${last.eps})`);
  sets.forEach((t, i) => {
    const x0 = xs.apply(i + 0.18);
    const x1 = xs.apply(i + 0.82);
    if (t.empirical !== null) {
      const y = ys.apply(t.empirical);
      fig.rect(x0, y, x1 - x0, fig.innerBottom - y, COLORS[0], 0.7);
    }
    const yT = ys.apply(t.theory);
    fig.line(x0 - 4, yT, x1 + 4, yT, COLORS[1], 2.0);
    fig.text((x0 + x1) / 2, fig.innerBottom + 32, t.name, { anchor: 'middle', size: 11 });
  });
  fig.text(fig.innerRight - 6, fig.innerTop + 14, 'bars: empirical, lines: theory', {
    anchor: 'end',
    size: 11,
  });
  return fig.render();
}

/** Basin occupancy fractions over the rescaled clock. */
export function makeOccupancyPlot(occupancyCsv: string, stationary?: number[]): string {
  const series = readOccupancy(occupancyCsv);
  const fig = new Figure();
  const xs = fig.xScale([0, series.t[series.t.length - 1] || 1]);
  const ys = fig.yScale([0, 1]);
  fig.axes(xs, ys, 'rescaled time', 'occupancy fraction', 'Metastable occupancy');
  const nStates = series.fractions[0].length;
  for (let s = 0; s < nStates; s++) {
    fig.path(
      series.t.map((t, i) => [xs.apply(t), ys.apply(series.fractions[i][s])] as [number, number]),
      COLORS[s % COLORS.length],
      1.6,
    );
    fig.text(fig.innerRight - 6, fig.innerTop + 14 + 15 * s, series.stateNames[s], {
      anchor: 'end',
      fill: COLORS[s % COLORS.length],
      size: 11,
    });
  }
  if (stationary) {
    for (const pi of stationary) {
      fig.line(fig.innerLeft, ys.apply(pi), fig.innerRight, ys.apply(pi), '#888', 1.0, '4,4');
    }
  }
  return fig.render();
}

function quantile(xs: number[], q: number): number {
  const s = [...xs].sort((a, b) => a - b);
  const idx = Math.min(s.length - 1, Math.floor(q * s.length));
  return s[idx];
}

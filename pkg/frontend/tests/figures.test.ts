import { describe, expect, it } from 'vitest';
import { mkdtempSync, writeFileSync, readFileSync, existsSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';

import {
  makeExitHistogram,
  makeLocusHistogram,
  makeOccupancyPlot,
  makeScalingFigure,
} from '../src/figures';
import { buildFigure, main, parseArgs } from '../src/cli';

const DATA = join(__dirname, '..', 'testdata');
const EXIT_CSV = join(DATA, 'exit', 'exit_records.csv');
const EXIT_JSON = join(DATA, 'exit', 'exit_summary.json');
const LOCUS_JSON = join(DATA, 'locus', 'locus_summary.json');
const OCC_CSV = join(DATA, 'metastable', 'metastable_occupancy.csv');

function tmpFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), 'figtest-'));
  const p = join(dir, name);
  writeFileSync(p, content);
  return p;
}

describe('scaling figure', () => {
  it('annotates slope 1.500 on an exact power-law table', () => {
    const rows = ['eps,mean_tau'];
    for (const eps of [0.1, 0.05, 0.025, 0.0125]) {
      rows.push(`${eps},${Math.pow(eps, -1.5)}`);
    }
    const csv = tmpFile('synthetic.csv', rows.join('\n'));
    const { slope, svg } = makeScalingFigure([csv]);
    expect(Math.abs(slope - 1.5)).toBeLessThanOrEqual(0.001);
    expect(svg).toContain('slope = 1.500');
  });

  it('renders from a campaign summary with the theory line', () => {
    const { svg, slope } = makeScalingFigure([EXIT_JSON]);
    expect(svg).toContain('<svg');
    expect(svg).toContain('theory 1/rate');
    expect(slope).toBeGreaterThan(1.0);
    expect(slope).toBeLessThan(2.0);
  });

  it('rejects fewer than three epsilon points', () => {
    const csv = tmpFile('two.csv', 'eps,mean_tau\n0.1,31.6\n0.05,89.4\n');
    expect(() => makeScalingFigure([csv])).toThrow(/at least 3/);
  });

  it('rejects mixed presets in one figure', () => {
    const summary = JSON.parse(readFileSync(EXIT_JSON, 'utf8'));
    summary.preset = 'some_other_preset';
    const other = tmpFile('other.json', JSON.stringify(summary));
    expect(() => makeScalingFigure([EXIT_JSON, other])).toThrow(/mixed presets/);
  });
});

describe('exit histogram', () => {
  it('renders with the exponential overlay and KS annotation', () => {
    const svg = makeExitHistogram(EXIT_CSV, EXIT_JSON);
    expect(svg).toContain('<svg');
    expect(svg).toContain('KS =');
    expect(svg).toContain('Normalized exit law');
  });

  it('rejects empty input', () => {
    const csv = tmpFile('empty.csv', readFileSync(EXIT_CSV, 'utf8').split('\n')[0] + '\n');
    expect(() => makeExitHistogram(csv)).toThrow(/no rows|no usable/);
  });

  it('rejects censored-only input', () => {
    const header = readFileSync(EXIT_CSV, 'utf8').split('\n')[0];
    const row = '0,0.1,True,,,7,,9,33.0,,';
    const csv = tmpFile('censored.csv', `${header}\n${row}\n`);
    expect(() => makeExitHistogram(csv)).toThrow(/censored/);
  });
});

describe('locus histogram', () => {
  it('renders empirical bars with theory lines', () => {
    const svg = makeLocusHistogram(LOCUS_JSON);
    expect(svg).toContain('<svg');
    expect(svg).toContain('half_plus');
    expect(svg).toContain('half_minus');
  });

  it('renders a single test set against its theory line', () => {
    const summary = JSON.parse(readFileSync(LOCUS_JSON, 'utf8'));
    for (const row of summary.per_eps) row.sets = row.sets.slice(0, 1);
    const single = tmpFile('single.json', JSON.stringify(summary));
    const svg = makeLocusHistogram(single);
    expect(svg).toContain('half_plus');
    expect(svg).not.toContain('half_minus');
  });

  it('rejects a schema without test sets', () => {
    const bad = tmpFile('bad.json', JSON.stringify({ per_eps: [{ eps: 0.1, sets: [] }] }));
    expect(() => makeLocusHistogram(bad)).toThrow(/no test sets/);
  });
});

describe('occupancy plot', () => {
  it('renders state fractions over rescaled time', () => {
    const svg = makeOccupancyPlot(OCC_CSV);
    expect(svg).toContain('<svg');
    expect(svg).toContain('state 0');
    expect(svg).toContain('state 1');
  });

  it('rejects a file without occupancy columns', () => {
    const bad = tmpFile('bad.csv', 't_rescaled,foo\n0.0,1.0\n');
    expect(() => makeOccupancyPlot(bad)).toThrow(/occupancy columns/);
  });
});

describe('cli', () => {
  it('parses arguments', () => {
    const args = parseArgs(['scaling', '--input', 'a.json', '--output', 'f.svg']);
    expect(args.kind).toBe('scaling');
    expect(args.inputs).toEqual(['a.json']);
  });

  it('builds every figure kind from the campaign artifacts', () => {
    expect(buildFigure('scaling', [EXIT_JSON])).toContain('<svg');
    expect(buildFigure('exit_hist', [EXIT_CSV, EXIT_JSON])).toContain('<svg');
    expect(buildFigure('locus_hist', [LOCUS_JSON])).toContain('<svg');
    expect(buildFigure('occupancy', [OCC_CSV])).toContain('<svg');
  });

  it('writes svg and png outputs', () => {
    const dir = mkdtempSync(join(tmpdir(), 'figout-'));
    const svgPath = join(dir, 'fig.svg');
    const pngPath = join(dir, 'fig.png');
    expect(main(['scaling', '--input', EXIT_JSON, '--output', svgPath])).toBe(0);
    expect(main(['scaling', '--input', EXIT_JSON, '--output', pngPath])).toBe(0);
    expect(existsSync(svgPath)).toBe(true);
    const png = readFileSync(pngPath);
    expect(png.subarray(1, 4).toString()).toBe('PNG');
  });

  it('fails with a machine-readable error on unknown kinds', () => {
    expect(main(['nope', '--input', EXIT_JSON, '--output', '/tmp/x.svg'])).toBe(1);
  });
});

describe('determinism', () => {
  it('identical inputs render identical bytes', () => {
    const a = makeScalingFigure([EXIT_JSON]).svg;
    const b = makeScalingFigure([EXIT_JSON]).svg;
    expect(a).toBe(b);
    expect(makeOccupancyPlot(OCC_CSV)).toBe(makeOccupancyPlot(OCC_CSV));
  });
});

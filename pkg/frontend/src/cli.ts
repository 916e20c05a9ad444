/**
 * Figure CLI: `node dist/cli.js <kind> --input ... --output fig.svg`.
 * Kinds: scaling, exit_hist, locus_hist, occupancy.  Output extension
 * selects the format; .png rasterizes the same SVG scene.
 */

import { writeFileSync } from 'fs';
import { makeExitHistogram, makeLocusHistogram, makeOccupancyPlot, makeScalingFigure } from './figures';

interface Args {
  kind: string;
  inputs: string[];
  output: string;
}

export function parseArgs(argv: string[]): Args {
  const [kind, ...rest] = argv;
  if (!kind) throw new Error('usage: <scaling|exit_hist|locus_hist|occupancy> --input PATH [--input PATH] --output PATH');
  const inputs: string[] = [];
  let output = '';
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === '--input') inputs.push(rest[++i]);
    else if (rest[i] === '--output') output = rest[++i];
    else throw new Error(`unknown argument ${rest[i]}`);
  }
  if (inputs.length === 0) throw new Error('at least one --input is required');
  if (!output) throw new Error('--output is required');
  return { kind, inputs, output };
}

export function buildFigure(kind: string, inputs: string[]): string {
  switch (kind) {
    case 'scaling':
      return makeScalingFigure(inputs).svg;
    case 'exit_hist': {
      const csv = inputs.find((p) => p.endsWith('.csv'));
      const json = inputs.find((p) => p.endsWith('.json'));
      if (!csv) throw new Error('exit_hist needs the records CSV');
      return makeExitHistogram(csv, json);
    }
    case 'locus_hist': {
      const json = inputs.find((p) => p.endsWith('.json'));
      if (!json) throw new Error('locus_hist needs the locus summary JSON');
      return makeLocusHistogram(json);
    }
    case 'occupancy': {
      const csv = inputs.find((p) => p.endsWith('.csv'));
      if (!csv) throw new Error('occupancy needs the occupancy CSV');
      return makeOccupancyPlot(csv);
    }
    default:
      throw new Error(`unknown figure kind ${kind}`);
  }
}

export function writeFigure(svg: string, output: string): void {
  if (output.endsWith('.png')) {
    // lazy import keeps SVG-only use independent of the native rasterizer
    const { Resvg } = require('@resvg/resvg-js');
    writeFileSync(output, new Resvg(svg).render().asPng());
  } else {
    writeFileSync(output, svg);
  }
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const svg = buildFigure(args.kind, args.inputs);
    writeFigure(svg, args.output);
    console.log(JSON.stringify({ written: args.output }));
    return 0;
  } catch (err) {
    console.error(JSON.stringify({ error: String(err instanceof Error ? err.message : err) }));
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}

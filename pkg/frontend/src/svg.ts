/**
 * Minimal SVG scene builder for the campaign figures: a single axes box
 * with linear or log scales, plus marks (lines, circles, bars, text).
 * Emits a standalone SVG string; rasterization happens at the CLI layer.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

const esc = (s: string) =>
  s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');

export class Scale {
  constructor(
    readonly domain: [number, number],
    readonly range: [number, number],
    readonly log = false,
  ) {
    if (log && (domain[0] <= 0 || domain[1] <= 0)) {
      throw new Error('log scale needs a positive domain');
    }
  }

  apply(v: number): number {
    const [d0, d1] = this.log
      ? [Math.log(this.domain[0]), Math.log(this.domain[1])]
      : this.domain;
    const x = this.log ? Math.log(v) : v;
    const t = (x - d0) / (d1 - d0);
    return this.range[0] + t * (this.range[1] - this.range[0]);
  }

  ticks(count = 5): number[] {
    if (this.log) {
      const lo = Math.ceil(Math.log10(this.domain[0]) - 1e-9);
      const hi = Math.floor(Math.log10(this.domain[1]) + 1e-9);
      const out: number[] = [];
      for (let e = lo; e <= hi; e++) out.push(10 ** e);
      if (out.length >= 2) return out;
      // fall through to linear ticks over a narrow log decade
    }
    const [d0, d1] = this.domain;
    const span = d1 - d0;
    const step = 10 ** Math.floor(Math.log10(span / count));
    const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= count + 1) ?? 10;
    const s = step * mult;
    const start = Math.ceil(d0 / s) * s;
    const out: number[] = [];
    for (let v = start; v <= d1 + 1e-12 * span; v += s) out.push(v);
    return out;
  }
}

export function fmtTick(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 10000 || a < 0.001) return v.toExponential(0);
  return parseFloat(v.toPrecision(4)).toString();
}

export class Figure {
  private marks: string[] = [];

  constructor(
    readonly width = 640,
    readonly height = 440,
    readonly margin: Margin = { top: 42, right: 24, bottom: 52, left: 64 },
  ) {}

  get innerLeft(): number {
    return this.margin.left;
  }
  get innerRight(): number {
    return this.width - this.margin.right;
  }
  get innerTop(): number {
    return this.margin.top;
  }
  get innerBottom(): number {
    return this.height - this.margin.bottom;
  }

  xScale(domain: [number, number], log = false): Scale {
    return new Scale(domain, [this.innerLeft, this.innerRight], log);
  }

  yScale(domain: [number, number], log = false): Scale {
    return new Scale(domain, [this.innerBottom, this.innerTop], log);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = '#333', width = 1, dash = ''): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : '';
    this.marks.push(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  path(points: Array<[number, number]>, stroke = '#1f77b4', width = 1.5, dash = ''): void {
    if (points.length === 0) return;
    const d = points
      .map(([x, y], i) => `${i === 0 ? 'M' : 'L'}${x.toFixed(2)},${y.toFixed(2)}`)
      .join(' ');
    const dd = dash ? ` stroke-dasharray="${dash}"` : '';
    this.marks.push(`<path d="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"${dd}/>`);
  }

  circle(x: number, y: number, r = 3.5, fill = '#1f77b4'): void {
    this.marks.push(`<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill = '#1f77b4', opacity = 1.0): void {
    this.marks.push(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}" fill-opacity="${opacity}"/>`,
    );
  }

  text(x: number, y: number, s: string, opts: { size?: number; anchor?: string; fill?: string; rotate?: boolean } = {}): void {
    const { size = 12, anchor = 'start', fill = '#222', rotate = false } = opts;
    const tr = rotate ? ` transform="rotate(-90 ${x.toFixed(2)} ${y.toFixed(2)})"` : '';
    this.marks.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="Helvetica, Arial, sans-serif"${tr}>${esc(s)}</text>`,
    );
  }

  axes(xs: Scale, ys: Scale, xLabel: string, yLabel: string, title: string): void {
    this.line(this.innerLeft, this.innerBottom, this.innerRight, this.innerBottom);
    this.line(this.innerLeft, this.innerBottom, this.innerLeft, this.innerTop);
    for (const t of xs.ticks()) {
      const x = xs.apply(t);
      this.line(x, this.innerBottom, x, this.innerBottom + 5);
      this.text(x, this.innerBottom + 18, fmtTick(t), { anchor: 'middle', size: 11 });
    }
    for (const t of ys.ticks()) {
      const y = ys.apply(t);
      this.line(this.innerLeft - 5, y, this.innerLeft, y);
      this.text(this.innerLeft - 8, y + 4, fmtTick(t), { anchor: 'end', size: 11 });
    }
    this.text((this.innerLeft + this.innerRight) / 2, this.height - 14, xLabel, { anchor: 'middle' });
    this.text(16, (this.innerTop + this.innerBottom) / 2, yLabel, { anchor: 'middle', rotate: true });
    this.text((this.innerLeft + this.innerRight) / 2, 22, title, { anchor: 'middle', size: 14 });
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.marks,
      '</svg>',
    ].join('\n');
  }
}

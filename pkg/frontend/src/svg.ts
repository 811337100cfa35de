/**
 * Deterministic SVG assembly: fixed styles, fixed numeric formatting,
 * no timestamps. Coordinates are emitted via a shortest-stable format so
 * identical inputs always produce identical bytes.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 64, right: 24, top: 40, bottom: 48 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`non-finite coordinate ${x}`);
  const s = x.toPrecision(8);
  return String(Number(s));
}

export interface Scale {
  (value: number): number;
  ticks(): number[];
  domain: [number, number];
  log: boolean;
}

function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step0;
  const step = step0 * (err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.ticks = () => niceTicks(d0, d1);
  f.domain = domain;
  f.log = false;
  return f;
}

export function logScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  if (d0 <= 0 || d1 <= 0) throw new Error("log scale needs positive domain");
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const span = l1 - l0 || 1;
  const [r0, r1] = range;
  const f = ((v: number) =>
    r0 + ((Math.log10(v) - l0) / span) * (r1 - r0)) as Scale;
  f.ticks = () => {
    const out: number[] = [];
    for (let e = Math.ceil(l0); e <= Math.floor(l1); e += 1) {
      out.push(Math.pow(10, e));
    }
    return out.length >= 2 ? out : [d0, d1];
  };
  f.domain = domain;
  f.log = true;
  return f;
}

function escapeText(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0);
  return String(Number(v.toPrecision(6)));
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(
    readonly title: string,
    readonly footer: string,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
      `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">${escapeText(title)}</text>`,
    );
  }

  axes(
    x: Scale,
    y: Scale,
    xLabel: string,
    yLabel: string,
  ): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.parts.push(
      `<g stroke="#333333" stroke-width="1">`,
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}"/>`,
      `</g>`,
    );
    for (const t of x.ticks()) {
      const px = fmt(x(t));
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333333"/>`,
        `<text x="${px}" y="${y0 + 20}" text-anchor="middle" font-size="11">${tickLabel(t)}</text>`,
      );
    }
    for (const t of y.ticks()) {
      const py = fmt(y(t));
      this.parts.push(
        `<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333333"/>`,
        `<text x="${x0 - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="11">${tickLabel(t)}</text>`,
      );
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="12">${escapeText(xLabel)}</text>`,
      `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${(y0 + y1) / 2})">${escapeText(yLabel)}</text>`,
    );
  }

  polyline(
    xs: number[],
    ys: number[],
    x: Scale,
    y: Scale,
    color: string,
    opts: { width?: number; dash?: string; opacity?: number } = {},
  ): void {
    const pts: string[] = [];
    for (let i = 0; i < xs.length; i += 1) {
      pts.push(`${fmt(x(xs[i]))},${fmt(y(ys[i]))}`);
    }
    const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
    const op = opts.opacity !== undefined ? ` opacity="${opts.opacity}"` : "";
    this.parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="${opts.width ?? 1.5}"${dash}${op} points="${pts.join(" ")}"/>`,
    );
  }

  circles(
    xs: number[],
    ys: number[],
    x: Scale,
    y: Scale,
    color: string,
    r = 2.5,
  ): void {
    for (let i = 0; i < xs.length; i += 1) {
      this.parts.push(
        `<circle cx="${fmt(x(xs[i]))}" cy="${fmt(y(ys[i]))}" r="${r}" fill="${color}"/>`,
      );
    }
  }

  legend(entries: { label: string; color: string }[]): void {
    let yPos = MARGIN.top + 6;
    for (const { label, color } of entries) {
      this.parts.push(
        `<rect x="${WIDTH - MARGIN.right - 150}" y="${yPos - 8}" width="12" height="3" fill="${color}"/>`,
        `<text x="${WIDTH - MARGIN.right - 132}" y="${yPos - 3}" font-size="11">${escapeText(label)}</text>`,
      );
      yPos += 16;
    }
  }

  plotRange(): { x: [number, number]; y: [number, number] } {
    return {
      x: [MARGIN.left, WIDTH - MARGIN.right],
      y: [HEIGHT - MARGIN.bottom, MARGIN.top],
    };
  }

  finish(): string {
    this.parts.push(
      `<text x="${WIDTH - MARGIN.right}" y="${HEIGHT - 6}" text-anchor="end" font-size="9" fill="#888888">${escapeText(this.footer)}</text>`,
      `</svg>`,
    );
    return this.parts.join("\n") + "\n";
  }
}

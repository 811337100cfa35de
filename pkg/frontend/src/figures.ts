/**
 * Figure builders: each reads its recorded artifact, assembles a data
 * model, and renders a deterministic SVG. No science is recomputed here;
 * the models carry only what the plots show plus simple diagnostics of
 * the plotted values (used by the automated flatness check).
 */

import { readFileSync } from "fs";
import { join } from "path";

import {
  numericColumn,
  readCsv,
  requireColumns,
  stringColumn,
  SchemaError,
} from "./csv.js";
import {
  linearScale,
  logScale,
  PALETTE,
  Scale,
  SvgBuilder,
} from "./svg.js";

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
}

export interface FigureModel {
  kind: string;
  series: Series[];
  diagnostics: Record<string, number>;
}

export interface Figure {
  name: string;
  model: FigureModel;
  svg: string;
}

function manifestHash(runDir: string): string {
  try {
    const man = JSON.parse(readFileSync(join(runDir, "manifest.json"), "utf8"));
    return typeof man.config_hash === "string" ? man.config_hash : "unknown";
  } catch {
    return "unknown";
  }
}

function footer(runDir: string): string {
  return `run ${manifestHash(runDir)}`;
}

function groupBy(keys: string[], xs: number[], ys: number[]): Series[] {
  const order: string[] = [];
  const acc = new Map<string, { xs: number[]; ys: number[] }>();
  for (let i = 0; i < keys.length; i += 1) {
    if (!acc.has(keys[i])) {
      acc.set(keys[i], { xs: [], ys: [] });
      order.push(keys[i]);
    }
    const bucket = acc.get(keys[i])!;
    bucket.xs.push(xs[i]);
    bucket.ys.push(ys[i]);
  }
  return order.map((label) => ({ label, ...acc.get(label)! }));
}

function thin(series: Series, maxPoints = 2048): Series {
  if (series.xs.length <= maxPoints) return series;
  const stride = Math.ceil(series.xs.length / maxPoints);
  const xs: number[] = [];
  const ys: number[] = [];
  for (let i = 0; i < series.xs.length; i += stride) {
    xs.push(series.xs[i]);
    ys.push(series.ys[i]);
  }
  return { label: series.label, xs, ys };
}

function extent(vals: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of vals) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  return [lo, hi];
}

function pad([lo, hi]: [number, number], frac = 0.05): [number, number] {
  const span = hi - lo;
  return [lo - frac * span, hi + frac * span];
}

// -- density overlay ---------------------------------------------------------

export function densityOverlay(runDir: string): Figure {
  const path = join(runDir, "densities.csv");
  const table = readCsv(path);
  requireColumns(path, table, ["alpha", "bin_index", "midpoint", "value"]);
  const alphas = stringColumn(path, table, "alpha");
  const mids = numericColumn(path, table, "midpoint");
  const vals = numericColumn(path, table, "value");
  const series = groupBy(alphas, mids, vals).map((s) => thin(s));
  const flatSeries = series.find((s) => Number(s.label) === 0.0);
  let maxDev = NaN;
  if (flatSeries) {
    maxDev = Math.max(...flatSeries.ys.map((v) => Math.abs(v - 1.0)));
  }
  const b = new SvgBuilder("Invariant densities", footer(runDir));
  const r = b.plotRange();
  const x = linearScale([0, 1], r.x);
  const y = linearScale(pad([0, extent(series.flatMap((s) => s.ys))[1]]), r.y);
  b.axes(x, y, "x", "density");
  series.forEach((s, i) =>
    b.polyline(s.xs, s.ys, x, y, PALETTE[i % PALETTE.length]),
  );
  b.legend(series.map((s, i) => ({
    label: `alpha=${s.label}`,
    color: PALETTE[i % PALETTE.length],
  })));
  return {
    name: "density_overlay",
    model: {
      kind: "density_overlay",
      series,
      diagnostics: { flat_max_deviation: maxDev },
    },
    svg: b.finish(),
  };
}

// -- log-log memory loss ------------------------------------------------------

export function memoryLossFigure(runDir: string): Figure {
  const path = join(runDir, "memory_loss.csv");
  const table = readCsv(path);
  requireColumns(path, table, ["n", "l1_distance", "envelope"]);
  const ns = numericColumn(path, table, "n");
  const d = numericColumn(path, table, "l1_distance");
  const env = numericColumn(path, table, "envelope");
  const pts: Series = { label: "distance", xs: [], ys: [] };
  const envPts: Series = { label: "envelope", xs: [], ys: [] };
  const floor = 1e-16;
  for (let i = 0; i < ns.length; i += 1) {
    if (ns[i] >= 1 && d[i] > floor) {
      pts.xs.push(ns[i]);
      pts.ys.push(d[i]);
    }
    if (ns[i] >= 1 && env[i] > floor) {
      envPts.xs.push(ns[i]);
      envPts.ys.push(env[i]);
    }
  }
  const b = new SvgBuilder("Pushforward merging (log-log)", footer(runDir));
  const r = b.plotRange();
  const x = logScale(extent(pts.xs.concat(envPts.xs)), r.x);
  const y = logScale(extent(pts.ys.concat(envPts.ys)), r.y);
  b.axes(x, y, "steps", "L1 distance");
  b.polyline(envPts.xs, envPts.ys, x, y, PALETTE[1], { dash: "6 3" });
  b.polyline(pts.xs, pts.ys, x, y, PALETTE[0]);
  b.legend([
    { label: "measured", color: PALETTE[0] },
    { label: "rate envelope", color: PALETTE[1] },
  ]);
  return {
    name: "memory_loss",
    model: {
      kind: "loglog_decay",
      series: [pts, envPts],
      diagnostics: { points: pts.xs.length },
    },
    svg: b.finish(),
  };
}

// -- variance curve ------------------------------------------------------------

export function sigmaCurveFigure(runDir: string, schedule = "main"): Figure {
  const path = join(runDir, `sigma_curve_${schedule}.csv`);
  const table = readCsv(path);
  requireColumns(path, table, ["t", "sigma2", "tail_estimate"]);
  const ts = numericColumn(path, table, "t");
  const v = numericColumn(path, table, "sigma2");
  const s: Series = { label: `sigma2 (${schedule})`, xs: ts, ys: v };
  const b = new SvgBuilder(`Variance curve (${schedule})`, footer(runDir));
  const r = b.plotRange();
  const x = linearScale([0, 1], r.x);
  const y = linearScale(pad(extent(v)), r.y);
  b.axes(x, y, "t", "variance");
  b.polyline(s.xs, s.ys, x, y, PALETTE[0], { width: 2 });
  return {
    name: `sigma_curve_${schedule}`,
    model: {
      kind: "sigma_curve",
      series: [s],
      diagnostics: { min: Math.min(...v), max: Math.max(...v) },
    },
    svg: b.finish(),
  };
}

// -- QQ marginal ----------------------------------------------------------------

export function qqFigure(runDir: string): Figure {
  const path = join(runDir, "qq_final.csv");
  const table = readCsv(path);
  requireColumns(path, table, ["prob", "finite_quantile", "limit_quantile"]);
  const fq = numericColumn(path, table, "finite_quantile");
  const lq = numericColumn(path, table, "limit_quantile");
  const s: Series = { label: "quantiles", xs: lq, ys: fq };
  let maxGap = 0;
  for (let i = 0; i < fq.length; i += 1) {
    maxGap = Math.max(maxGap, Math.abs(fq[i] - lq[i]));
  }
  const b = new SvgBuilder("Final-time marginal QQ", footer(runDir));
  const r = b.plotRange();
  const all = pad(extent(lq.concat(fq)));
  const x = linearScale(all, r.x);
  const y = linearScale(all, r.y);
  b.axes(x, y, "limit quantile", "finite-level quantile");
  b.polyline([all[0], all[1]], [all[0], all[1]], x, y, "#999999", {
    dash: "4 3",
  });
  b.circles(s.xs, s.ys, x, y, PALETTE[0], 1.8);
  return {
    name: "qq_final",
    model: {
      kind: "qq",
      series: [s],
      diagnostics: { max_quantile_gap: maxGap },
    },
    svg: b.finish(),
  };
}

// -- path fan ---------------------------------------------------------------------

export function pathFanFigure(runDir: string): Figure {
  const path = join(runDir, "path_fan.csv");
  const table = readCsv(path);
  requireColumns(path, table, ["path_id", "t", "value"]);
  const ids = stringColumn(path, table, "path_id");
  const ts = numericColumn(path, table, "t");
  const vals = numericColumn(path, table, "value");
  const series = groupBy(ids, ts, vals);
  const b = new SvgBuilder("Fluctuation path fan", footer(runDir));
  const r = b.plotRange();
  const x = linearScale([0, 1], r.x);
  const y = linearScale(pad(extent(vals)), r.y);
  b.axes(x, y, "t", "fluctuation");
  series.forEach((s, i) =>
    b.polyline(s.xs, s.ys, x, y, PALETTE[i % PALETTE.length], {
      width: 0.8,
      opacity: 0.65,
    }),
  );
  return {
    name: "path_fan",
    model: {
      kind: "path_fan",
      series,
      diagnostics: { paths: series.length },
    },
    svg: b.finish(),
  };
}

// -- ladder trends -----------------------------------------------------------------

export function laddersFigure(runDir: string): Figure {
  const path = join(runDir, "ladders.csv");
  const table = readCsv(path);
  requireColumns(path, table, ["test", "n", "statistic", "se"]);
  const tests = stringColumn(path, table, "test");
  const ns = numericColumn(path, table, "n");
  const stats = numericColumn(path, table, "statistic");
  const series = groupBy(tests, ns, stats.map(Math.abs)).map((s) => ({
    ...s,
    ys: s.ys.map((v) => Math.max(v, 1e-12)),
  }));
  const b = new SvgBuilder("Vanishing-statistic ladders", footer(runDir));
  const r = b.plotRange();
  const x = logScale(extent(series.flatMap((s) => s.xs)), r.x);
  const y = logScale(extent(series.flatMap((s) => s.ys)), r.y);
  b.axes(x, y, "level n", "|statistic|");
  series.forEach((s, i) => {
    b.polyline(s.xs, s.ys, x, y, PALETTE[i % PALETTE.length]);
    b.circles(s.xs, s.ys, x, y, PALETTE[i % PALETTE.length], 2.5);
  });
  b.legend(series.map((s, i) => ({
    label: s.label,
    color: PALETTE[i % PALETTE.length],
  })));
  return {
    name: "ladders",
    model: {
      kind: "ladder_trend",
      series,
      diagnostics: { ladders: series.length },
    },
    svg: b.finish(),
  };
}

export const STANDARD_SET = [
  densityOverlay,
  memoryLossFigure,
  (d: string) => sigmaCurveFigure(d, "main"),
  (d: string) => sigmaCurveFigure(d, "anchor"),
  qqFigure,
  pathFanFigure,
  laddersFigure,
];

export function renderAll(runDir: string): Figure[] {
  return STANDARD_SET.map((make) => make(runDir));
}

/**
 * Turns result rows into the panel/series structure of a log-log
 * convergence figure.
 *
 * The x axis is one of the refinement variables (h, tau, beta); series are
 * formed by grouping rows over the identity columns that still vary after
 * fixing the x axis and dropping columns constant across the whole input.
 * A series needs at least two distinct x values to draw a line; rows from
 * a ladder that does not vary in x (say the fixed-mesh rows of a pulse
 * file when plotting against h) drop out that way.  Points are kept
 * coarse to fine, so the last point of a series is its finest one.
 */

import type { ResultRow } from "./csv.js";

export type XVar = "h" | "tau" | "beta";
export type ErrColumn = "err_grad_dt" | "err_dt2" | "err_grad_l6_acc" | "ebar";

export const X_VARS: readonly XVar[] = ["h", "tau", "beta"];
export const ERR_COLUMNS: readonly ErrColumn[] = [
  "err_grad_dt",
  "err_dt2",
  "err_grad_l6_acc",
  "ebar",
];

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  key: (string | number)[];
  points: Point[];
}

export interface Panel {
  title: string;
  series: Series[];
}

export interface Figure {
  x: XVar;
  err: ErrColumn;
  panels: Panel[];
}

/** Identity columns a series can be keyed on, in label order. */
const ID_COLUMNS = ["experiment", "k", "beta", "h", "tau"] as const;
type IdColumn = (typeof ID_COLUMNS)[number];

export function fmtNum(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e-2 && a < 1e4) {
    return String(parseFloat(v.toPrecision(4)));
  }
  return v.toExponential(0).replace("e+", "e");
}

function columnLabel(col: IdColumn, v: string | number): string {
  if (col === "experiment") return String(v);
  return `${col} ${typeof v === "number" ? fmtNum(v) : v}`;
}

export function buildFigure(
  rows: ResultRow[],
  x: XVar,
  err: ErrColumn
): Figure {
  if (!X_VARS.includes(x)) {
    throw new Error(`x must be one of ${X_VARS.join(", ")}, got ${x}`);
  }
  if (!ERR_COLUMNS.includes(err)) {
    throw new Error(`err must be one of ${ERR_COLUMNS.join(", ")}, got ${err}`);
  }
  const kept = rows.filter((r) => r[err] !== null);
  if (kept.length === 0) {
    throw new Error(`no rows carry a value in column ${err}`);
  }

  const idCols = ID_COLUMNS.filter((c) => c !== x);
  const varying = idCols.filter(
    (c) => new Set(kept.map((r) => String(r[c]))).size > 1
  );

  const groups = new Map<string, { key: (string | number)[]; rows: ResultRow[] }>();
  for (const r of kept) {
    const key = varying.map((c) => r[c]);
    const tag = key.map(String).join("|");
    let g = groups.get(tag);
    if (!g) {
      g = { key, rows: [] };
      groups.set(tag, g);
    }
    g.rows.push(r);
  }

  let series: (Series & { beta: number | null; k: number; experiment: string })[] = [];
  for (const g of groups.values()) {
    const pts = g.rows
      .map((r) => ({ x: r[x], y: r[err] as number }))
      .sort((a, b) => b.x - a.x);
    if (new Set(pts.map((p) => p.x)).size < 2) continue;
    const label =
      varying.length === 0
        ? kept[0]!.experiment
        : varying.map((c, i) => columnLabel(c, g.key[i]!)).join(", ");
    series.push({
      label,
      key: g.key,
      points: pts,
      beta: x === "beta" ? null : g.rows[0]!.beta,
      k: g.rows[0]!.k,
      experiment: g.rows[0]!.experiment,
    });
  }
  if (series.length === 0) {
    throw new Error(`no series varies in ${x} (need two distinct values)`);
  }
  series.sort((a, b) => cmpKeys(a.key, b.key));

  const splitByBeta = varying.includes("beta") && varying.includes("k");
  let panels: Panel[];
  if (splitByBeta) {
    const betas = [...new Set(series.map((s) => s.beta as number))].sort(
      (a, b) => a - b
    );
    panels = betas.map((beta) => ({
      title: `beta ${fmtNum(beta)}`,
      series: series
        .filter((s) => s.beta === beta)
        .map((s) => ({ ...s, label: stripBeta(s.label) })),
    }));
  } else {
    // Title from the series that survived the two-point prune, not from
    // kept[0]: the file's leading ladder may be the one that dropped out.
    const names = [...new Set(series.map((s) => s.experiment))];
    panels = [{ title: names.join(", "), series }];
  }
  return { x, err, panels };
}

function stripBeta(label: string): string {
  return label
    .split(", ")
    .filter((part) => !part.startsWith("beta "))
    .join(", ");
}

function cmpKeys(a: (string | number)[], b: (string | number)[]): number {
  for (let i = 0; i < Math.min(a.length, b.length); i++) {
    if (a[i]! < b[i]!) return -1;
    if (a[i]! > b[i]!) return 1;
  }
  return a.length - b.length;
}

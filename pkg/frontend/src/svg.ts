/**
 * Log-log SVG renderer for convergence figures.
 *
 * One SVG per figure, one plot area per panel, laid out left to right.
 * Each series is a polyline with circle markers; dashed guide lines show
 * the requested reference slopes, anchored at the final (finest) point of
 * a series.  When the number of slopes matches the number of series in a
 * panel they pair up in order; otherwise every guide hangs off the first
 * series.  Output is a pure function of the input, so repeated renders
 * are byte-identical.
 */

import type { Figure, Panel, Point, Series } from "./figure.js";
import { fmtNum } from "./figure.js";

const PW = 300;
const PH = 270;
const ML = 62;
const MT = 34;
const MB = 50;
const GAP = 26;
const MR = 14;

const COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmtCoord(v: number): string {
  return v.toFixed(2);
}

interface LogScale {
  min: number;
  max: number;
  of: (v: number) => number;
}

function logScale(values: number[], lo: number, hi: number): LogScale {
  let min = Math.log10(Math.min(...values));
  let max = Math.log10(Math.max(...values));
  if (max - min < 1e-9) {
    min -= 0.5;
    max += 0.5;
  }
  const pad = 0.04 * (max - min);
  min -= pad;
  max += pad;
  return {
    min,
    max,
    of: (v: number) => lo + ((Math.log10(v) - min) / (max - min)) * (hi - lo),
  };
}

/** Tick positions at 1, 2, 5 times a power of ten inside the scale. */
function logTicks(s: LogScale): number[] {
  const ticks: number[] = [];
  for (let d = Math.floor(s.min) - 1; d <= Math.ceil(s.max); d++) {
    for (const m of [1, 2, 5]) {
      const v = m * Math.pow(10, d);
      const lv = Math.log10(v);
      if (lv >= s.min && lv <= s.max) ticks.push(v);
    }
  }
  return ticks;
}

function panelSvg(
  panel: Panel,
  slopes: number[],
  x0: number,
  xLabel: string,
  yLabel: string
): string {
  const left = x0 + ML;
  const right = x0 + ML + PW;
  const top = MT;
  const bottom = MT + PH;

  const xs = panel.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = panel.series.flatMap((s) => s.points.map((p) => p.y));
  const sx = logScale(xs, left, right);
  const sy = logScale(ys, bottom, top);

  const parts: string[] = [];
  parts.push(
    `<rect x="${left}" y="${top}" width="${PW}" height="${PH}" fill="none" stroke="#333"/>`
  );
  parts.push(
    `<text x="${left + PW / 2}" y="${top - 12}" text-anchor="middle" font-size="13">${esc(panel.title)}</text>`
  );

  for (const v of logTicks(sx)) {
    const px = sx.of(v);
    parts.push(
      `<line x1="${fmtCoord(px)}" y1="${top}" x2="${fmtCoord(px)}" y2="${bottom}" stroke="#ddd" stroke-width="0.5"/>`,
      `<text x="${fmtCoord(px)}" y="${bottom + 16}" text-anchor="middle" font-size="10">${fmtNum(v)}</text>`
    );
  }
  for (const v of logTicks(sy)) {
    const py = sy.of(v);
    parts.push(
      `<line x1="${left}" y1="${fmtCoord(py)}" x2="${right}" y2="${fmtCoord(py)}" stroke="#ddd" stroke-width="0.5"/>`,
      `<text x="${left - 6}" y="${fmtCoord(py + 3)}" text-anchor="end" font-size="10">${fmtNum(v)}</text>`
    );
  }
  parts.push(
    `<text x="${left + PW / 2}" y="${bottom + 34}" text-anchor="middle" font-size="12">${esc(xLabel)}</text>`,
    `<text x="${x0 + 16}" y="${top + PH / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 ${x0 + 16} ${top + PH / 2})">${esc(yLabel)}</text>`
  );

  panel.series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length]!;
    const pts = s.points
      .map((p) => `${fmtCoord(sx.of(p.x))},${fmtCoord(sy.of(p.y))}`)
      .join(" ");
    parts.push(
      `<polyline class="series" points="${pts}" fill="none" stroke="${color}" stroke-width="1.4"/>`
    );
    for (const p of s.points) {
      parts.push(
        `<circle cx="${fmtCoord(sx.of(p.x))}" cy="${fmtCoord(sy.of(p.y))}" r="3" fill="${color}"/>`
      );
    }
  });

  slopes.forEach((slope, i) => {
    const anchor =
      slopes.length === panel.series.length ? panel.series[i]! : panel.series[0]!;
    const p0 = anchor.points[anchor.points.length - 1]!;
    parts.push(guideLine(p0, slope, sx, sy));
  });

  const lx = left + 8;
  panel.series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length]!;
    const ly = top + 14 + 15 * i;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 18}" y2="${ly - 4}" stroke="${color}" stroke-width="1.4"/>`,
      `<text x="${lx + 23}" y="${ly}" font-size="10">${esc(s.label)}</text>`
    );
  });

  return parts.join("\n");
}

/** Dashed reference line through p0 with the given log-log slope. */
function guideLine(
  p0: Point,
  slope: number,
  sx: LogScale,
  sy: LogScale
): string {
  const lx0 = Math.log10(p0.x);
  const ly0 = Math.log10(p0.y);
  const lx1 = sx.max - 0.02 * (sx.max - sx.min);
  const ly1 = ly0 + slope * (lx1 - lx0);
  const x0 = sx.of(p0.x);
  const y0 = sy.of(p0.y);
  const x1 = sx.of(Math.pow(10, lx1));
  const y1 = sy.of(Math.pow(10, ly1));
  return (
    `<line class="guide" x1="${fmtCoord(x0)}" y1="${fmtCoord(y0)}" x2="${fmtCoord(x1)}" y2="${fmtCoord(y1)}" ` +
    `stroke="#555" stroke-width="1" stroke-dasharray="6,3" data-slope="${slope}"/>`
  );
}

export function renderSvg(fig: Figure, slopes: number[]): string {
  const n = fig.panels.length;
  const width = n * (ML + PW) + (n - 1) * GAP + MR;
  const height = MT + PH + MB;
  const body = fig.panels
    .map((p, i) => panelSvg(p, slopes, i * (ML + PW + GAP), fig.x, fig.err))
    .join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

#!/usr/bin/env node
/**
 * Render a log-log convergence figure from result CSVs.
 *
 * Usage:
 *   kuz-plots --in space.csv --x h --err err_grad_dt --slopes 1,2,3 --out space.svg
 *
 * --in may repeat to pool several files into one figure.  Input files are
 * only read, never written; the output file is written once, after the
 * figure built without error.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { parseCsv, type ResultRow } from "./csv.js";
import {
  ERR_COLUMNS,
  X_VARS,
  buildFigure,
  type ErrColumn,
  type XVar,
} from "./figure.js";
import { renderSvg } from "./svg.js";

export interface FigureSpec {
  inputs: string[];
  x: XVar;
  err: ErrColumn;
  slopes: number[];
  out: string;
}

export function parseArgs(argv: string[]): FigureSpec {
  const inputs: string[] = [];
  let x: string | undefined;
  let err: string | undefined;
  let slopes: number[] = [];
  let out: string | undefined;

  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i]!;
    const next = (): string => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`${flag} needs a value`);
      return v;
    };
    switch (flag) {
      case "--in":
        inputs.push(next());
        break;
      case "--x":
        x = next();
        break;
      case "--err":
        err = next();
        break;
      case "--slopes":
        slopes = next()
          .split(",")
          .map((s) => {
            const v = Number(s);
            if (!Number.isFinite(v)) throw new Error(`bad slope ${s}`);
            return v;
          });
        break;
      case "--out":
        out = next();
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (inputs.length === 0) throw new Error("need at least one --in file");
  if (!out) throw new Error("need --out");
  if (!x || !(X_VARS as readonly string[]).includes(x)) {
    throw new Error(`--x must be one of ${X_VARS.join(", ")}`);
  }
  if (!err || !(ERR_COLUMNS as readonly string[]).includes(err)) {
    throw new Error(`--err must be one of ${ERR_COLUMNS.join(", ")}`);
  }
  return { inputs, x: x as XVar, err: err as ErrColumn, slopes, out };
}

export function run(spec: FigureSpec): string {
  const rows: ResultRow[] = [];
  for (const path of spec.inputs) {
    rows.push(...parseCsv(readFileSync(path, "utf-8")));
  }
  const fig = buildFigure(rows, spec.x, spec.err);
  const svg = renderSvg(fig, spec.slopes);
  writeFileSync(spec.out, svg);
  const nSeries = fig.panels.reduce((n, p) => n + p.series.length, 0);
  return `${spec.out}: ${fig.panels.length} panel(s), ${nSeries} series`;
}

export function main(argv: string[]): number {
  try {
    console.log(run(parseArgs(argv)));
    return 0;
  } catch (e) {
    console.error(e instanceof Error ? e.message : String(e));
    return 1;
  }
}

if (
  process.argv[1] &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  process.exitCode = main(process.argv.slice(2));
}

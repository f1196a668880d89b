/**
 * Reader/writer for the result CSV emitted by the solver package.
 *
 * One header row, one data row per run.  Numbers are written with 17
 * significant digits on the producing side, so parsing to a double and
 * re-serializing loses nothing.  Empty cells mean the quantity was not
 * recorded for that run and map to null.
 */

export const HEADER = [
  "experiment",
  "k",
  "h",
  "tau",
  "beta",
  "t",
  "err_grad_dt",
  "err_dt2",
  "err_grad_l6_acc",
  "ebar",
  "rate",
] as const;

export type Column = (typeof HEADER)[number];

export interface ResultRow {
  experiment: string;
  k: number;
  h: number;
  tau: number;
  beta: number;
  t: number;
  err_grad_dt: number | null;
  err_dt2: number | null;
  err_grad_l6_acc: number | null;
  ebar: number | null;
  rate: number | null;
}

export function parseCsv(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV: no header line");
  }
  if (lines[0] !== HEADER.join(",")) {
    throw new Error(`unexpected CSV header: ${lines[0]}`);
  }
  return lines.slice(1).map((line, i) => parseLine(line, i + 2));
}

function parseLine(line: string, lineno: number): ResultRow {
  const cells = line.split(",");
  if (cells.length !== HEADER.length) {
    throw new Error(
      `line ${lineno}: expected ${HEADER.length} fields, got ${cells.length}`
    );
  }
  const num = (j: number): number => {
    const v = Number(cells[j]);
    if (cells[j] === "" || !Number.isFinite(v)) {
      throw new Error(`line ${lineno}: bad number ${cells[j]!} in ${HEADER[j]!}`);
    }
    return v;
  };
  const opt = (j: number): number | null => (cells[j] === "" ? null : num(j));
  return {
    experiment: cells[0]!,
    k: num(1),
    h: num(2),
    tau: num(3),
    beta: num(4),
    t: num(5),
    err_grad_dt: opt(6),
    err_dt2: opt(7),
    err_grad_l6_acc: opt(8),
    ebar: opt(9),
    rate: opt(10),
  };
}

export function writeCsv(rows: ResultRow[]): string {
  const fmt = (v: number | null): string => (v === null ? "" : String(v));
  const out = [HEADER.join(",")];
  for (const r of rows) {
    out.push(
      [
        r.experiment,
        String(r.k),
        String(r.h),
        String(r.tau),
        String(r.beta),
        String(r.t),
        fmt(r.err_grad_dt),
        fmt(r.err_dt2),
        fmt(r.err_grad_l6_acc),
        fmt(r.ebar),
        fmt(r.rate),
      ].join(",")
    );
  }
  return out.join("\n") + "\n";
}

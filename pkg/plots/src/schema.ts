// Column schemas of the simulator's CSV outputs. The header line must
// match verbatim; a renamed or reordered column means the file was not
// produced by a compatible simulator build and is refused.

export const TRAJECTORY_COLUMNS = [
  "cycle", "time_s", "outcome", "phase_idx", "alpha", "F_est", "F_real",
  "n_mean_est", "p_below_est", "p_tag_est", "p_above_est",
  "p_below_real", "p_tag_real", "p_above_real", "jump_flag",
] as const;

export const CURVES_COLUMNS = [
  "cycle", "time_s", "F_est_mean", "F_real_mean",
  "p_below_est_mean", "p_tag_est_mean", "p_above_est_mean",
  "p_below_real_mean", "p_tag_real_mean", "p_above_real_mean",
] as const;

export const CONVERGENCE_COLUMNS = [
  "bin_index", "bin_start_cycle", "bin_end_cycle", "count",
  "fraction", "cumulative_fraction",
] as const;

export const JUMP_COLUMNS = [
  "offset_cycle", "offset_s", "F_real_mean", "F_est_mean", "count",
] as const;

export const OUTCOME_CHARS = ["g", "e", "u"] as const;

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  // one array per column, numeric except the trajectory outcome column
  numeric: Map<string, number[]>;
  outcome: string[] | null;
  rows: number;
}

export function parseCsv(text: string, path: string,
                         expected: readonly string[]): Table {
  const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  if (header.length !== expected.length ||
      header.some((h, i) => h !== expected[i])) {
    throw new SchemaError(
      `${path}: header [${header.join(",")}] does not match the expected ` +
      `schema [${expected.join(",")}]`);
  }
  const numeric = new Map<string, number[]>();
  for (const col of expected) {
    if (col !== "outcome") numeric.set(col, []);
  }
  const outcome: string[] | null = expected.includes("outcome") ? [] : null;
  for (let r = 1; r < lines.length; r++) {
    const fields = lines[r].split(",");
    if (fields.length !== expected.length) {
      throw new SchemaError(
        `${path}: row ${r + 1} has ${fields.length} fields, ` +
        `expected ${expected.length}`);
    }
    for (let c = 0; c < expected.length; c++) {
      const col = expected[c];
      if (col === "outcome") {
        if (!(OUTCOME_CHARS as readonly string[]).includes(fields[c])) {
          throw new SchemaError(
            `${path}: row ${r + 1} has outcome '${fields[c]}'`);
        }
        outcome!.push(fields[c]);
        continue;
      }
      const value = Number(fields[c]);
      if (!Number.isFinite(value)) {
        throw new SchemaError(
          `${path}: row ${r + 1} column ${col} is not a finite number ` +
          `('${fields[c]}')`);
      }
      numeric.get(col)!.push(value);
    }
  }
  if (lines.length === 1) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return {
    columns: [...expected],
    numeric,
    outcome,
    rows: lines.length - 1,
  };
}

export function column(table: Table, name: string): number[] {
  const values = table.numeric.get(name);
  if (values === undefined) {
    throw new SchemaError(`missing column ${name}`);
  }
  return values;
}

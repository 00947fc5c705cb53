import { readFileSync, writeFileSync } from "node:fs";
import { dirname, join, basename } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import {
  CONVERGENCE_COLUMNS,
  CURVES_COLUMNS,
  JUMP_COLUMNS,
  SchemaError,
  Table,
  TRAJECTORY_COLUMNS,
  parseCsv,
} from "./schema.js";
import {
  renderConvergence,
  renderEnsemble,
  renderJump,
  renderTrajectory,
} from "./panels.js";

export const KINDS: Record<string, {
  columns: readonly string[];
  render: (table: Table) => string;
}> = {
  trajectory: { columns: TRAJECTORY_COLUMNS, render: renderTrajectory },
  ensemble: { columns: CURVES_COLUMNS, render: renderEnsemble },
  jump: { columns: JUMP_COLUMNS, render: renderJump },
  convergence: { columns: CONVERGENCE_COLUMNS, render: renderConvergence },
};

const USAGE =
  "usage: render --kind trajectory|ensemble|jump|convergence --in PATH [--out PATH]";

export function defaultOutPath(inPath: string, kind: string): string {
  const stem = basename(inPath).replace(/\.[^.]*$/, "");
  return join(dirname(inPath), `${stem}_${kind}.svg`);
}

// Reads, validates, renders and writes one chart; returns the output path.
export function renderFile(kind: string, inPath: string,
                           outPath?: string): string {
  const spec = KINDS[kind];
  if (spec === undefined) {
    throw new SchemaError(`unknown panel kind '${kind}' (${USAGE})`);
  }
  const text = readFileSync(inPath, "utf8");
  const table = parseCsv(text, inPath, spec.columns);
  const svg = spec.render(table);
  const target = outPath ?? defaultOutPath(inPath, kind);
  writeFileSync(target, svg, "utf8");
  return target;
}

export function main(argv: string[]): number {
  try {
    const { values, positionals } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
      },
    });
    if (positionals.length !== 1 || positionals[0] !== "render") {
      throw new SchemaError(USAGE);
    }
    if (values.kind === undefined || values.in === undefined) {
      throw new SchemaError(`--kind and --in are required (${USAGE})`);
    }
    const target = renderFile(values.kind, values.in, values.out);
    console.log(`wrote ${target}`);
    return 0;
  } catch (err) {
    const code = err instanceof Error && "code" in err
      ? String((err as NodeJS.ErrnoException).code) : "";
    if (err instanceof SchemaError || code.startsWith("ERR_PARSE_ARGS")) {
      console.error(`schema error: ${(err as Error).message}`);
      return 2;
    }
    if (code !== "") {
      console.error(`i/o error: ${(err as Error).message}`);
      return 4;
    }
    throw err;
  }
}

const isMain = process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (isMain) {
  process.exit(main(process.argv.slice(2)));
}

// The four panel kinds. Each function takes an already validated table
// and returns a complete SVG document as a string.

import { Table, column } from "./schema.js";
import { Frame, Svg, frame, legend } from "./svg.js";
import {
  ABOVE_TARGET,
  AT_TARGET,
  BAR_EDGE,
  BAR_FILL,
  BELOW_TARGET,
  CONTROL_CURVE,
  CUMULATIVE_CURVE,
  EST_CURVE,
  JUMP_MARK,
  MARKER_LINE,
  OUTCOME_COLORS,
  REAL_CURVE,
} from "./style.js";

const WIDTH = 760;
const LEFT = 62;
const RIGHT = WIDTH - 18;

function curve(svg: Svg, fr: Frame, xs: number[], ys: number[],
               stroke: typeof REAL_CURVE): void {
  svg.polyline(xs.map((x, i) => [fr.sx(x), fr.sy(ys[i])]), stroke);
}

function span(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) { lo -= 0.5; hi += 0.5; }
  return [lo, hi];
}

// Single run: detector record on top, control amplitude in the middle,
// the estimator's population split at the bottom.
export function renderTrajectory(table: Table): string {
  const svg = new Svg(WIDTH, 560);
  const cycles = column(table, "cycle");
  const dx: [number, number] = [0, cycles[cycles.length - 1]];

  svg.text(WIDTH / 2, 18, "single trajectory");

  // detector band: one tick per cycle, row by outcome
  const bandTop = 34;
  const bandBottom = 118;
  const bandFrame = frame(svg, LEFT, RIGHT, bandTop, bandBottom, dx, [0, 1],
                          "", "detector", 6, 0);
  const rowY: Record<string, number> = { e: 0.78, u: 0.5, g: 0.22 };
  const outcomes = table.outcome!;
  for (let i = 0; i < outcomes.length; i++) {
    const x = bandFrame.sx(cycles[i]);
    const y = bandFrame.sy(rowY[outcomes[i]]);
    svg.line(x, y - 4, x, y + 4,
             { color: OUTCOME_COLORS[outcomes[i]], width: 1 });
  }
  svg.text(RIGHT + 4, bandFrame.sy(0.78) + 3.5, "e", "start");
  svg.text(RIGHT + 4, bandFrame.sy(0.5) + 3.5, "u", "start");
  svg.text(RIGHT + 4, bandFrame.sy(0.22) + 3.5, "g", "start");
  const jumpFlags = column(table, "jump_flag");
  for (let i = 0; i < jumpFlags.length; i++) {
    if (jumpFlags[i] > 0) {
      svg.circle(bandFrame.sx(cycles[i]), bandBottom + 5, 2, JUMP_MARK);
    }
  }

  // control amplitude
  const alpha = column(table, "alpha");
  const [aLo, aHi] = span(alpha);
  const pad = 0.1 * (aHi - aLo);
  const alphaFrame = frame(svg, LEFT, RIGHT, 150, 282, dx,
                           [aLo - pad, aHi + pad], "", "injection amplitude");
  if (aLo < 0 && aHi > 0) {
    svg.line(LEFT, alphaFrame.sy(0), RIGHT, alphaFrame.sy(0), MARKER_LINE);
  }
  curve(svg, alphaFrame, cycles, alpha, CONTROL_CURVE);

  // estimated populations below / at / above the target level
  const popFrame = frame(svg, LEFT, RIGHT, 314, 506, dx, [0, 1],
                         "feedback cycle", "estimated population");
  curve(svg, popFrame, cycles, column(table, "p_below_est"), BELOW_TARGET);
  curve(svg, popFrame, cycles, column(table, "p_tag_est"), AT_TARGET);
  curve(svg, popFrame, cycles, column(table, "p_above_est"), ABOVE_TARGET);
  legend(svg, LEFT + 10, 330, [
    ["below target", BELOW_TARGET],
    ["at target", AT_TARGET],
    ["above target", ABOVE_TARGET],
  ]);
  return svg.render();
}

// Ensemble means: both fidelity traces plus the true population split.
export function renderEnsemble(table: Table): string {
  const svg = new Svg(WIDTH, 420);
  const timesMs = column(table, "time_s").map((t) => t * 1e3);
  svg.text(WIDTH / 2, 18, "ensemble mean evolution");
  const fr = frame(svg, LEFT, RIGHT, 40, 366, [0, timesMs[timesMs.length - 1]],
                   [0, 1], "time (ms)", "ensemble mean");
  curve(svg, fr, timesMs, column(table, "p_below_real_mean"), BELOW_TARGET);
  curve(svg, fr, timesMs, column(table, "p_above_real_mean"), ABOVE_TARGET);
  curve(svg, fr, timesMs, column(table, "F_est_mean"), EST_CURVE);
  curve(svg, fr, timesMs, column(table, "F_real_mean"), REAL_CURVE);
  legend(svg, RIGHT - 170, 56, [
    ["true fidelity", REAL_CURVE],
    ["estimated fidelity", EST_CURVE],
    ["below target", BELOW_TARGET],
    ["above target", ABOVE_TARGET],
  ]);
  return svg.render();
}

// Average fidelity around detected photon-loss events.
export function renderJump(table: Table): string {
  const svg = new Svg(WIDTH, 420);
  const offsetsMs = column(table, "offset_s").map((t) => t * 1e3);
  svg.text(WIDTH / 2, 18, "jump-aligned recovery");
  const [lo, hi] = span(offsetsMs);
  const fr = frame(svg, LEFT, RIGHT, 40, 366, [lo, hi], [0, 1],
                   "time from jump (ms)", "aligned fidelity");
  svg.line(fr.sx(0), 40, fr.sx(0), 366, MARKER_LINE);
  curve(svg, fr, offsetsMs, column(table, "F_est_mean"), EST_CURVE);
  curve(svg, fr, offsetsMs, column(table, "F_real_mean"), REAL_CURVE);
  legend(svg, LEFT + 10, 56, [
    ["true fidelity", REAL_CURVE],
    ["estimated fidelity", EST_CURVE],
  ]);
  return svg.render();
}

// Histogram of convergence times with the cumulative fraction overlaid.
export function renderConvergence(table: Table): string {
  const svg = new Svg(WIDTH, 420);
  const starts = column(table, "bin_start_cycle");
  const ends = column(table, "bin_end_cycle");
  const fraction = column(table, "fraction");
  const cumulative = column(table, "cumulative_fraction");
  svg.text(WIDTH / 2, 18, "estimator convergence time");
  const fr = frame(svg, LEFT, RIGHT, 40, 366,
                   [starts[0], ends[ends.length - 1]], [0, 1],
                   "feedback cycle", "fraction of trajectories");
  for (let i = 0; i < fraction.length; i++) {
    const x = fr.sx(starts[i]);
    const w = fr.sx(ends[i]) - x;
    const y = fr.sy(fraction[i]);
    if (fraction[i] > 0) {
      svg.rect(x + 0.5, y, Math.max(w - 1, 0.5), fr.sy(0) - y,
               BAR_FILL, BAR_EDGE);
    }
  }
  curve(svg, fr, ends, cumulative, CUMULATIVE_CURVE);
  legend(svg, RIGHT - 170, 56, [["cumulative", CUMULATIVE_CURVE]]);
  return svg.render();
}

// Centralized chart style. Population curves keep the dashed-dot blue /
// solid green / dashed red convention so panels can be compared against
// the reference figures side by side.

export interface Stroke {
  color: string;
  width: number;
  dash?: string;
}

export const BELOW_TARGET: Stroke = { color: "#2458c5", width: 1.5, dash: "8 3 2 3" };
export const AT_TARGET: Stroke = { color: "#1a9e3f", width: 1.8 };
export const ABOVE_TARGET: Stroke = { color: "#d62728", width: 1.5, dash: "6 4" };

export const REAL_CURVE: Stroke = { color: "#111111", width: 1.6 };
export const EST_CURVE: Stroke = { color: "#7a7a7a", width: 1.2, dash: "3 3" };
export const CONTROL_CURVE: Stroke = { color: "#7a4fc5", width: 1.3 };
export const CUMULATIVE_CURVE: Stroke = { color: "#1a9e3f", width: 1.8 };
export const MARKER_LINE: Stroke = { color: "#999999", width: 1.0, dash: "4 4" };

export const OUTCOME_COLORS: Record<string, string> = {
  g: "#2458c5",
  e: "#d62728",
  u: "#c4c4c4",
};
export const JUMP_MARK = "#d62728";

export const AXIS_COLOR = "#000000";
export const GRID_COLOR = "#e0e0e0";
export const BAR_FILL = "#9ecae1";
export const BAR_EDGE = "#3182bd";
export const FONT_SIZE = 11;
export const FONT_FAMILY = "sans-serif";

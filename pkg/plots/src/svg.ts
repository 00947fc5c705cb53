// Minimal deterministic SVG builder. Everything is assembled from
// strings with fixed-precision coordinates, so identical inputs give
// identical bytes: no timestamps, no randomness, no locale formatting.

import {
  AXIS_COLOR,
  FONT_FAMILY,
  FONT_SIZE,
  GRID_COLOR,
  Stroke,
} from "./style.js";

// pixel coordinate, stable 2-decimal form without negative zero
export function px(x: number): string {
  const v = Math.round(x * 100) / 100;
  return (Object.is(v, -0) ? 0 : v).toFixed(2);
}

// tick label: plain notation for ordinary magnitudes, trimmed zeros
export function fmt(x: number): string {
  if (x === 0) return "0";
  const ax = Math.abs(x);
  if (ax >= 1e6 || ax < 1e-4) return x.toExponential(2);
  return parseFloat(x.toPrecision(6)).toString();
}

export function linScale(d0: number, d1: number, r0: number, r1: number):
    (x: number) => number {
  const span = d1 - d0;
  const k = span === 0 ? 0 : (r1 - r0) / span;
  return (x: number) => r0 + (x - d0) * k;
}

// round tick positions: step is 1, 2 or 5 times a power of ten
export function ticks(lo: number, hi: number, count: number): number[] {
  if (!(hi > lo)) return [lo];
  const raw = (hi - lo) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= raw) { step = m * mag; break; }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function strokeAttr(s: Stroke): string {
  const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
  return `stroke="${s.color}" stroke-width="${s.width}" fill="none"${dash}`;
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  raw(element: string): void {
    this.parts.push(element);
  }

  rect(x: number, y: number, w: number, h: number,
       fill: string, edge?: string): void {
    const stroke = edge ? ` stroke="${edge}" stroke-width="1"` : "";
    this.parts.push(
      `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}" ` +
      `fill="${fill}"${stroke}/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, s: Stroke): void {
    this.parts.push(
      `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}" ` +
      strokeAttr(s) + "/>");
  }

  polyline(points: Array<[number, number]>, s: Stroke): void {
    if (points.length === 0) return;
    const joined = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
    this.parts.push(`<polyline points="${joined}" ${strokeAttr(s)}/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(
      `<circle cx="${px(x)}" cy="${px(y)}" r="${px(r)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string,
       anchor: "start" | "middle" | "end" = "middle",
       rotate = 0): void {
    const transform = rotate !== 0
      ? ` transform="rotate(${rotate} ${px(x)} ${px(y)})"` : "";
    this.parts.push(
      `<text x="${px(x)}" y="${px(y)}" font-family="${FONT_FAMILY}" ` +
      `font-size="${FONT_SIZE}" text-anchor="${anchor}" ` +
      `fill="${AXIS_COLOR}"${transform}>${escapeXml(content)}</text>`);
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="#ffffff"/>\n` +
      this.parts.join("\n") + "\n</svg>\n");
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Frame {
  x0: number;  // left edge of the plotting area in pixels
  x1: number;
  y0: number;  // top edge
  y1: number;
  sx: (v: number) => number;
  sy: (v: number) => number;
}

// axis frame with ticks, grid lines and labels; y grows upward in data space
export function frame(svg: Svg, x0: number, x1: number, y0: number, y1: number,
                      dx: [number, number], dy: [number, number],
                      xLabel: string, yLabel: string,
                      xTickCount = 6, yTickCount = 5): Frame {
  const sx = linScale(dx[0], dx[1], x0, x1);
  const sy = linScale(dy[0], dy[1], y1, y0);
  for (const t of ticks(dx[0], dx[1], xTickCount)) {
    const xp = sx(t);
    svg.line(xp, y0, xp, y1, { color: GRID_COLOR, width: 0.5 });
    svg.line(xp, y1, xp, y1 + 4, { color: AXIS_COLOR, width: 1 });
    svg.text(xp, y1 + 16, fmt(t));
  }
  for (const t of ticks(dy[0], dy[1], yTickCount)) {
    const yp = sy(t);
    svg.line(x0, yp, x1, yp, { color: GRID_COLOR, width: 0.5 });
    svg.line(x0 - 4, yp, x0, yp, { color: AXIS_COLOR, width: 1 });
    svg.text(x0 - 7, yp + 3.5, fmt(t), "end");
  }
  svg.line(x0, y0, x0, y1, { color: AXIS_COLOR, width: 1 });
  svg.line(x0, y1, x1, y1, { color: AXIS_COLOR, width: 1 });
  if (xLabel) svg.text((x0 + x1) / 2, y1 + 31, xLabel);
  if (yLabel) svg.text(x0 - 38, (y0 + y1) / 2, yLabel, "middle", -90);
  return { x0, x1, y0, y1, sx, sy };
}

export function legend(svg: Svg, x: number, y: number,
                       entries: Array<[string, Stroke]>): void {
  let yy = y;
  for (const [label, stroke] of entries) {
    svg.line(x, yy - 3.5, x + 22, yy - 3.5, stroke);
    svg.text(x + 27, yy, label, "start");
    yy += 15;
  }
}

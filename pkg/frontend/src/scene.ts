// Scene rendering: the grid summary becomes a block of colored cells with an
// intensity legend. No image realism, the annotator reads structure from the
// color field and the overlaid boxes.

import type { Box, SceneSummary } from './api';
import { boxToRect } from './grid';

type Rgb = [number, number, number];

// dark slate -> teal -> warm yellow, readable on both ends
const RAMP: Array<[number, Rgb]> = [
  [0.0, [24, 32, 58]],
  [0.5, [36, 134, 140]],
  [1.0, [238, 222, 98]],
];

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

/** Map a normalized intensity in [0, 1] onto the ramp as a css color. */
export function intensityColor(t: number): string {
  const v = Math.min(1, Math.max(0, t));
  for (let i = 1; i < RAMP.length; i++) {
    const [t0, c0] = RAMP[i - 1];
    const [t1, c1] = RAMP[i];
    if (v <= t1) {
      const f = t1 === t0 ? 0 : (v - t0) / (t1 - t0);
      const r = Math.round(lerp(c0[0], c1[0], f));
      const g = Math.round(lerp(c0[1], c1[1], f));
      const b = Math.round(lerp(c0[2], c1[2], f));
      return `rgb(${r}, ${g}, ${b})`;
    }
  }
  const [, last] = RAMP[RAMP.length - 1];
  return `rgb(${last[0]}, ${last[1]}, ${last[2]})`;
}

export interface ValueRange {
  lo: number;
  hi: number;
}

export function cellRange(cells: number[][]): ValueRange {
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of cells) {
    for (const v of row) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!isFinite(lo)) return { lo: 0, hi: 1 };
  if (hi - lo < 1e-9) hi = lo + 1e-9;
  return { lo, hi };
}

export function normalize(value: number, range: ValueRange): number {
  return (value - range.lo) / (range.hi - range.lo);
}

export interface LegendStop {
  value: number;
  color: string;
}

/** Evenly spaced value/color pairs spanning the scene's intensity range. */
export function legendStops(range: ValueRange, count = 5): LegendStop[] {
  const stops: LegendStop[] = [];
  for (let i = 0; i < count; i++) {
    const t = count === 1 ? 0 : i / (count - 1);
    stops.push({
      value: range.lo + t * (range.hi - range.lo),
      color: intensityColor(t),
    });
  }
  return stops;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  summary: SceneSummary,
  cellPx: number,
): ValueRange {
  const range = cellRange(summary.cells);
  for (let y = 0; y < summary.height; y++) {
    const row = summary.cells[y] ?? [];
    for (let x = 0; x < summary.width; x++) {
      ctx.fillStyle = intensityColor(normalize(row[x] ?? range.lo, range));
      ctx.fillRect(x * cellPx, y * cellPx, cellPx, cellPx);
    }
  }
  // hairline grid so cell edges (= box snap targets) stay visible
  ctx.strokeStyle = 'rgba(0, 0, 0, 0.25)';
  ctx.lineWidth = 1;
  for (let x = 0; x <= summary.width; x++) {
    ctx.beginPath();
    ctx.moveTo(x * cellPx + 0.5, 0);
    ctx.lineTo(x * cellPx + 0.5, summary.height * cellPx);
    ctx.stroke();
  }
  for (let y = 0; y <= summary.height; y++) {
    ctx.beginPath();
    ctx.moveTo(0, y * cellPx + 0.5);
    ctx.lineTo(summary.width * cellPx, y * cellPx + 0.5);
    ctx.stroke();
  }
  return range;
}

export function drawBoxOverlay(
  ctx: CanvasRenderingContext2D,
  box: Box,
  cellPx: number,
  color: string,
  label?: string,
): void {
  const rect = boxToRect(box, cellPx);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.strokeRect(rect.left, rect.top, rect.width, rect.height);
  if (label) {
    ctx.font = '12px sans-serif';
    const pad = 3;
    const w = ctx.measureText(label).width + pad * 2;
    ctx.fillStyle = color;
    ctx.fillRect(rect.left, Math.max(0, rect.top - 16), w, 16);
    ctx.fillStyle = '#fff';
    ctx.fillText(label, rect.left + pad, Math.max(12, rect.top - 4));
  }
}

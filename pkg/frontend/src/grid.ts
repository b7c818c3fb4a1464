// Screen <-> grid mapping for box annotation. Boxes are (x0, y0, x1, y1) in
// grid units with x1 > x0 and y1 > y0; the canvas draws each cell as a
// cellPx square. rectToBox(boxToRect(b)) must return b exactly for any
// integer box, otherwise drawn annotations would drift on the way to the
// transcript.

import type { Box } from './api';

export interface Rect {
  left: number;
  top: number;
  width: number;
  height: number;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

export function boxToRect(box: Box, cellPx: number): Rect {
  const [x0, y0, x1, y1] = box;
  return {
    left: x0 * cellPx,
    top: y0 * cellPx,
    width: (x1 - x0) * cellPx,
    height: (y1 - y0) * cellPx,
  };
}

/** Snap a pixel rect to grid lines, clamped in-bounds with at least one cell. */
export function rectToBox(
  rect: Rect,
  cellPx: number,
  gridWidth: number,
  gridHeight: number,
): Box {
  const x0 = clamp(Math.round(rect.left / cellPx), 0, gridWidth);
  const y0 = clamp(Math.round(rect.top / cellPx), 0, gridHeight);
  const x1 = clamp(Math.round((rect.left + rect.width) / cellPx), 0, gridWidth);
  const y1 = clamp(Math.round((rect.top + rect.height) / cellPx), 0, gridHeight);
  return ensureArea([x0, y0, x1, y1], gridWidth, gridHeight);
}

/**
 * Turn a pointer drag (two canvas corners, any order) into a grid box.
 * Every cell the drag touches is included, so a click inside a single
 * cell yields that cell.
 */
export function dragToBox(
  ax: number,
  ay: number,
  bx: number,
  by: number,
  cellPx: number,
  gridWidth: number,
  gridHeight: number,
): Box {
  const x0 = clamp(Math.floor(Math.min(ax, bx) / cellPx), 0, gridWidth);
  const y0 = clamp(Math.floor(Math.min(ay, by) / cellPx), 0, gridHeight);
  const x1 = clamp(Math.ceil(Math.max(ax, bx) / cellPx), 0, gridWidth);
  const y1 = clamp(Math.ceil(Math.max(ay, by) / cellPx), 0, gridHeight);
  return ensureArea([x0, y0, x1, y1], gridWidth, gridHeight);
}

function ensureArea(box: Box, gridWidth: number, gridHeight: number): Box {
  let [x0, y0, x1, y1] = box;
  if (x1 <= x0) {
    if (x0 >= gridWidth) x0 = gridWidth - 1;
    x1 = x0 + 1;
  }
  if (y1 <= y0) {
    if (y0 >= gridHeight) y0 = gridHeight - 1;
    y1 = y0 + 1;
  }
  return [x0, y0, x1, y1];
}

/** Client-side mirror of the server's box validation. */
export function boxInBounds(box: Box, gridWidth: number, gridHeight: number): boolean {
  const [x0, y0, x1, y1] = box;
  return x0 >= 0 && y0 >= 0 && x1 <= gridWidth && y1 <= gridHeight && x0 < x1 && y0 < y1;
}

// Cumulative-cost tracking for the dashboard. Points come from answer acks
// during a session and from the ledger snapshot after a reload, so the chart
// survives page refreshes without losing history.

import type { LedgerSnapshot } from './api';

export interface CostPoint {
  answered: number;
  cost: number;
}

/** Ledger invariant mirrored client-side; the chart refuses to lie. */
export function isMonotone(points: CostPoint[]): boolean {
  for (let i = 1; i < points.length; i++) {
    if (points[i].cost < points[i - 1].cost - 1e-9) return false;
    if (points[i].answered < points[i - 1].answered) return false;
  }
  return true;
}

/** Rebuild the storyline-resolution trajectory from a ledger snapshot. */
export function seriesFromLedger(ledger: LedgerSnapshot): CostPoint[] {
  const points: CostPoint[] = [{ answered: 0, cost: 0 }];
  let answered = 0;
  let cost = 0;
  for (const record of ledger.records) {
    answered += record.questions;
    cost += record.realized_cost;
    points.push({ answered, cost });
  }
  return points;
}

/** Scale points into canvas pixel pairs, y grows downwards. */
export function polylinePoints(
  points: CostPoint[],
  width: number,
  height: number,
  pad = 8,
): Array<[number, number]> {
  if (points.length === 0) return [];
  const maxX = Math.max(1, ...points.map((p) => p.answered));
  const maxY = Math.max(1e-9, ...points.map((p) => p.cost));
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  return points.map((p) => [
    pad + (p.answered / maxX) * innerW,
    pad + innerH - (p.cost / maxY) * innerH,
  ]);
}

export function drawCostChart(
  ctx: CanvasRenderingContext2D,
  points: CostPoint[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = '#fafafa';
  ctx.fillRect(0, 0, width, height);
  const pts = polylinePoints(points, width, height);
  if (pts.length === 0) return;
  ctx.strokeStyle = '#2a6b9c';
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(pts[0][0], pts[0][1]);
  for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i][0], pts[i][1]);
  ctx.stroke();
  ctx.fillStyle = '#2a6b9c';
  for (const [x, y] of pts) {
    ctx.beginPath();
    ctx.arc(x, y, 2.5, 0, Math.PI * 2);
    ctx.fill();
  }
}

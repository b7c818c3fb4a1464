import { describe, expect, it } from 'vitest';

import { cellRange, intensityColor, legendStops, normalize } from '../src/scene';

describe('intensityColor', () => {
  it('pins the ramp endpoints', () => {
    expect(intensityColor(0)).toBe('rgb(24, 32, 58)');
    expect(intensityColor(1)).toBe('rgb(238, 222, 98)');
    expect(intensityColor(0.5)).toBe('rgb(36, 134, 140)');
  });

  it('clamps out-of-range intensities', () => {
    expect(intensityColor(-3)).toBe(intensityColor(0));
    expect(intensityColor(7)).toBe(intensityColor(1));
  });
});

describe('cellRange / normalize', () => {
  it('spans the observed values', () => {
    const range = cellRange([
      [0.2, -1.0],
      [3.5, 0.0],
    ]);
    expect(range).toEqual({ lo: -1.0, hi: 3.5 });
    expect(normalize(-1.0, range)).toBe(0);
    expect(normalize(3.5, range)).toBe(1);
  });

  it('keeps a constant field finite', () => {
    const range = cellRange([[0.7, 0.7]]);
    expect(range.hi).toBeGreaterThan(range.lo);
    expect(normalize(0.7, range)).toBeLessThanOrEqual(1);
    expect(normalize(0.7, range)).toBeGreaterThanOrEqual(0);
  });

  it('defaults an empty grid', () => {
    expect(cellRange([])).toEqual({ lo: 0, hi: 1 });
  });
});

describe('legendStops', () => {
  it('walks the range low to high with ramp colors', () => {
    const stops = legendStops({ lo: 2, hi: 10 }, 5);
    expect(stops).toHaveLength(5);
    expect(stops[0].value).toBe(2);
    expect(stops[4].value).toBe(10);
    expect(stops[0].color).toBe(intensityColor(0));
    expect(stops[4].color).toBe(intensityColor(1));
    for (let i = 1; i < stops.length; i++) {
      expect(stops[i].value).toBeGreaterThan(stops[i - 1].value);
    }
  });
});

import { describe, expect, it } from 'vitest';

import { rectCorners, scaleBoxToRender } from '../src/overlay';
import type { BBox } from '../src/types';

describe('scaleBoxToRender', () => {
  const bbox: BBox = [100, 150, 300, 400];

  it.each([
    [800, 800, 400, 400, 0.5], // zoomed out to half
    [800, 800, 1600, 1600, 2], // zoomed in to double
  ])('corners track the render ratio (%ix%i -> %ix%i)', (nw, nh, rw, rh, scale) => {
    const rect = scaleBoxToRender(bbox, nw, nh, rw, rh);
    const expected: Array<[number, number]> = [
      [bbox[0] * scale, bbox[1] * scale],
      [bbox[2] * scale, bbox[1] * scale],
      [bbox[0] * scale, bbox[3] * scale],
      [bbox[2] * scale, bbox[3] * scale],
    ];
    const corners = rectCorners(rect);
    for (let i = 0; i < 4; i++) {
      expect(Math.abs(corners[i][0] - expected[i][0])).toBeLessThanOrEqual(1);
      expect(Math.abs(corners[i][1] - expected[i][1])).toBeLessThanOrEqual(1);
    }
  });

  it('handles anisotropic scaling', () => {
    const rect = scaleBoxToRender([0, 0, 400, 200], 800, 400, 400, 100);
    expect(rect).toEqual({ left: 0, top: 0, width: 200, height: 50 });
  });

  it('identity at natural size', () => {
    const rect = scaleBoxToRender(bbox, 800, 800, 800, 800);
    expect(rect).toEqual({ left: 100, top: 150, width: 200, height: 250 });
  });

  it('rejects a zero-size image', () => {
    expect(() => scaleBoxToRender(bbox, 0, 800, 400, 400)).toThrow();
  });
});

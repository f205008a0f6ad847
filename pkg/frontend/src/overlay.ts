import type { BBox } from './types';

export interface OverlayRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

/**
 * Map a box in image pixels onto the rendered element's coordinate space.
 *
 * The overlay must track the image at any zoom: corners of the returned
 * rect equal the bbox corners scaled by the render ratio, so the drawn
 * rectangle stays on the object when the browser resizes the image.
 */
export function scaleBoxToRender(
  bbox: BBox,
  naturalWidth: number,
  naturalHeight: number,
  renderedWidth: number,
  renderedHeight: number,
): OverlayRect {
  if (naturalWidth <= 0 || naturalHeight <= 0) {
    throw new Error(`image has no natural size: ${naturalWidth}x${naturalHeight}`);
  }
  const sx = renderedWidth / naturalWidth;
  const sy = renderedHeight / naturalHeight;
  const [x1, y1, x2, y2] = bbox;
  return {
    left: x1 * sx,
    top: y1 * sy,
    width: (x2 - x1) * sx,
    height: (y2 - y1) * sy,
  };
}

/** Corner positions of an overlay rect, for fidelity checks. */
export function rectCorners(rect: OverlayRect): Array<[number, number]> {
  return [
    [rect.left, rect.top],
    [rect.left + rect.width, rect.top],
    [rect.left, rect.top + rect.height],
    [rect.left + rect.width, rect.top + rect.height],
  ];
}

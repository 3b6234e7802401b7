/** Pose scatter layout: fit aperture positions into a canvas viewport. */

export interface Point3 {
  x: number;
  y: number;
  z: number;
}

export interface ScatterLayout {
  /** Canvas coordinates, one per input point, same order. */
  px: Float64Array;
  py: Float64Array;
  /** Data-space window actually shown (after padding/aspect fitting). */
  xDomain: [number, number];
  yDomain: [number, number];
}

/**
 * Equal-aspect mapping of (x, y) positions into a width x height viewport
 * with a margin. Degenerate extents (a linear track) get a symmetric window
 * so the track still renders centered.
 */
export function layoutScatter(
  points: Point3[],
  width: number,
  height: number,
  margin = 24,
): ScatterLayout {
  const n = points.length;
  const px = new Float64Array(n);
  const py = new Float64Array(n);
  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const p of points) {
    xLo = Math.min(xLo, p.x);
    xHi = Math.max(xHi, p.x);
    yLo = Math.min(yLo, p.y);
    yHi = Math.max(yHi, p.y);
  }
  if (n === 0) {
    xLo = -1; xHi = 1; yLo = -1; yHi = 1;
  }
  const spanLimit = Math.max(xHi - xLo, yHi - yLo, 1e-3);
  const half = spanLimit / 2 * 1.05;
  const cx = (xLo + xHi) / 2;
  const cy = (yLo + yHi) / 2;
  const innerW = Math.max(1, width - 2 * margin);
  const innerH = Math.max(1, height - 2 * margin);
  const scale = Math.min(innerW, innerH) / (2 * half);
  for (let i = 0; i < n; i += 1) {
    const p = points[i]!;
    px[i] = width / 2 + (p.x - cx) * scale;
    py[i] = height / 2 - (p.y - cy) * scale;
  }
  const hx = innerW / (2 * scale);
  const hy = innerH / (2 * scale);
  return {
    px,
    py,
    xDomain: [cx - hx, cx + hx],
    yDomain: [cy - hy, cy + hy],
  };
}

/** Round tick positions covering a domain, at most `count` of them. */
export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rawStep) ?? rawStep;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step / 1e6; v += step) {
    out.push(Math.abs(v) < step / 1e6 ? 0 : v);
  }
  return out;
}

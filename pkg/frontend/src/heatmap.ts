/**
 * Slice rendering: dB matrix -> RGBA pixels. The server already floors the
 * values at its dbMin; the view applies its own display threshold so the
 * slider works without a refetch.
 */

import type { ImageSlice } from "./types.js";

/** Dark-to-bright perceptual ramp (trimmed plasma stops). */
const STOPS: [number, number, number][] = [
  [13, 8, 135],
  [84, 2, 163],
  [139, 10, 165],
  [185, 50, 137],
  [219, 92, 104],
  [244, 136, 73],
  [254, 188, 43],
  [240, 249, 33],
];

export function colorAt(t: number): [number, number, number] {
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (STOPS.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, STOPS.length - 1);
  const frac = pos - lo;
  const a = STOPS[lo]!;
  const b = STOPS[hi]!;
  return [
    Math.round(a[0] + (b[0] - a[0]) * frac),
    Math.round(a[1] + (b[1] - a[1]) * frac),
    Math.round(a[2] + (b[2] - a[2]) * frac),
  ];
}

/**
 * Map dB values through the display threshold: anything at or below dbMin is
 * the colormap floor, 0 dB is the top.
 */
export function normalizeDb(db: number, dbMin: number): number {
  if (dbMin >= 0) return db >= 0 ? 1 : 0;
  const t = (Math.max(db, dbMin) - dbMin) / -dbMin;
  return Math.min(1, Math.max(0, t));
}

/** Number of pixels strictly above the display threshold. */
export function countAboveThreshold(values: number[][], dbMin: number): number {
  let n = 0;
  for (const row of values) {
    for (const v of row) {
      if (v > dbMin) n += 1;
    }
  }
  return n;
}

export interface RasterizedSlice {
  width: number;
  height: number;
  /** RGBA, row-major with y flipped so +y points up on screen. */
  pixels: Uint8ClampedArray<ArrayBuffer>;
}

/**
 * One pixel per sample; callers scale with image-rendering: pixelated.
 * Rows of values_db run along x, columns along y.
 */
export function rasterize(slice: ImageSlice, dbMin: number): RasterizedSlice {
  const nx = slice.values_db.length;
  const ny = slice.values_db[0]?.length ?? 0;
  const pixels = new Uint8ClampedArray(nx * ny * 4);
  for (let j = 0; j < ny; j += 1) {
    const screenRow = ny - 1 - j;
    for (let i = 0; i < nx; i += 1) {
      const db = slice.values_db[i]![j]!;
      const [r, g, b] = colorAt(normalizeDb(db, dbMin));
      const at = (screenRow * nx + i) * 4;
      pixels[at] = r;
      pixels[at + 1] = g;
      pixels[at + 2] = b;
      pixels[at + 3] = 255;
    }
  }
  return { width: nx, height: ny, pixels };
}

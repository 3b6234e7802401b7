/** Human-readable numbers for panel readouts. */

const SCALES_M: [number, string][] = [
  [1.0, "m"],
  [1e-2, "cm"],
  [1e-3, "mm"],
  [1e-6, "µm"],
];

/** Length with an auto-picked unit: 0.0375 -> "3.75 cm". */
export function formatLength(meters: number | null | undefined, digits = 3): string {
  if (meters === null || meters === undefined || Number.isNaN(meters)) return "—";
  if (meters === 0) return "0 m";
  const mag = Math.abs(meters);
  for (const [scale, unit] of SCALES_M) {
    if (mag >= scale) {
      return `${trim(meters / scale, digits)} ${unit}`;
    }
  }
  const last = SCALES_M[SCALES_M.length - 1]!;
  return `${trim(meters / last[0], digits)} ${last[1]}`;
}

/** Frequency in GHz/MHz/kHz/Hz, whichever keeps the mantissa sane. */
export function formatFrequency(hz: number, digits = 3): string {
  const mag = Math.abs(hz);
  if (mag >= 1e9) return `${trim(hz / 1e9, digits)} GHz`;
  if (mag >= 1e6) return `${trim(hz / 1e6, digits)} MHz`;
  if (mag >= 1e3) return `${trim(hz / 1e3, digits)} kHz`;
  return `${trim(hz, digits)} Hz`;
}

export function formatDb(db: number, digits = 1): string {
  return `${db.toFixed(digits)} dB`;
}

export function formatSeconds(seconds: number): string {
  if (seconds < 1e-3) return `${(seconds * 1e6).toFixed(0)} µs`;
  if (seconds < 1) return `${(seconds * 1e3).toFixed(1)} ms`;
  return `${seconds.toFixed(2)} s`;
}

/** Significant digits without trailing zero noise. */
function trim(value: number, digits: number): string {
  return String(Number(value.toPrecision(digits)));
}

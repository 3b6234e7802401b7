/**
 * Pure view-model builders: server payloads in, display rows out. All
 * physics numbers pass through untouched apart from unit formatting, so a
 * test can hold a panel against the /derived payload it came from.
 */

import { formatFrequency, formatLength } from "./format.js";
import type {
  Algorithm,
  ArrayConfig,
  Derived,
  PatternConfig,
  PatternMode,
  SceneConfig,
  SessionView,
} from "./types.js";

export interface Row {
  label: string;
  value: string;
}

/** Waveform panel readout; every value originates in GET /derived. */
export function waveformRows(derived: Derived): Row[] {
  const [dx, dy] = derived.crossRangeResolution_m;
  return [
    { label: "Range resolution δz", value: formatLength(derived.rangeResolution_m) },
    { label: "Cross-range δx", value: formatLength(dx) },
    { label: "Cross-range δy", value: formatLength(dy) },
    { label: "Bandwidth", value: formatFrequency(derived.bandwidth_Hz) },
    { label: "Wavelength λc", value: formatLength(derived.wavelength_m) },
    { label: "Max unambiguous range", value: formatLength(derived.maxRange_m) },
    { label: "Max pose spacing λc/4", value: formatLength(derived.maxPoseSpacing_m) },
  ];
}

/** Scan panel summary; aperture numbers also come from GET /derived. */
export function scanRows(derived: Derived): Row[] {
  const [ex, ey] = derived.apertureExtent_m;
  return [
    { label: "Poses", value: String(derived.numPoses) },
    { label: "Aperture extent x", value: formatLength(ex) },
    { label: "Aperture extent y", value: formatLength(ey) },
  ];
}

export interface ArrayElementRow {
  kind: "tx" | "rx";
  x_m: number;
  y_m: number;
}

export function arrayElements(array: ArrayConfig): ArrayElementRow[] {
  if (array.mode === "monostatic") {
    return [
      { kind: "tx", x_m: 0, y_m: 0 },
      { kind: "rx", x_m: 0, y_m: 0 },
    ];
  }
  return [
    ...array.tx_m.map(([x, y]) => ({ kind: "tx" as const, x_m: x, y_m: y })),
    ...array.rx_m.map(([x, y]) => ({ kind: "rx" as const, x_m: x, y_m: y })),
  ];
}

/** Midpoint virtual elements for the Tx/Rx pairs (display only). */
export function virtualElements(array: ArrayConfig): { x_m: number; y_m: number }[] {
  if (array.mode === "monostatic") return [{ x_m: 0, y_m: 0 }];
  const out: { x_m: number; y_m: number }[] = [];
  for (const [tx, ty] of array.tx_m) {
    for (const [rx, ry] of array.rx_m) {
      out.push({ x_m: (tx + rx) / 2, y_m: (ty + ry) / 2 });
    }
  }
  return out;
}

/**
 * Algorithms worth offering for a scan geometry. The server still validates;
 * this only keeps the dropdown honest.
 */
export function compatibleAlgorithms(mode: PatternMode): Algorithm[] {
  switch (mode) {
    case "linear":
      return ["bpa", "rma", "rma_linear", "fft_linear", "empm"];
    case "rectilinear":
      return ["bpa", "rma", "fft_planar", "empm"];
    case "irregular":
      return ["bpa", "empm"];
    case "circular":
      return ["bpa", "pfa_circular"];
    case "cylindrical":
      return ["bpa", "pfa_cylindrical"];
  }
}

export function describePattern(pattern: PatternConfig): string {
  switch (pattern.mode) {
    case "rectilinear":
      return `${pattern.nx ?? 1} × ${pattern.ny ?? 1} grid`;
    case "linear":
      return `${pattern.ny ?? 1}-pose line`;
    case "irregular":
      return `${pattern.count ?? 0}-pose track, dz ≤ ${formatLength(pattern.dz_max_m ?? 0)}`;
    case "circular":
      return `${pattern.n_theta ?? 0} angles, radius ${formatLength(pattern.radius_m ?? 0)}`;
    case "cylindrical":
      return `${pattern.n_theta ?? 0} × ${pattern.ny ?? 1} cylinder, radius ${formatLength(pattern.radius_m ?? 0)}`;
  }
}

export function scenePointCount(scene: SceneConfig): number | null {
  if ("points" in scene) return scene.points.length;
  if ("random" in scene) return scene.random.count;
  return null; // letters: the server owns the list
}

export interface StageLamp {
  name: "beat" | "image";
  state: "fresh" | "stale" | "missing";
}

/** Staleness lamps mirror the server's dirty flags verbatim. */
export function stageLamps(session: SessionView): StageLamp[] {
  const lamp = (name: "beat" | "image"): StageLamp => {
    if (!session.artifacts[name]) return { name, state: "missing" };
    return { name, state: session.dirty[name] ? "stale" : "fresh" };
  };
  return [lamp("beat"), lamp("image")];
}

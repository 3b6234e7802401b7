/**
 * Payload shapes of the imaging service's HTTP API. These mirror the server's
 * JSON exactly; the UI never derives physics on its own.
 */

export interface WaveformConfig {
  f0_Hz: number;
  K_Hz_per_s: number;
  Nk: number;
  fS_Hz: number;
  fC_Hz: number;
}

export type ArrayConfig =
  | { mode: "monostatic" }
  | { mode: "mimo"; tx_m: [number, number][]; rx_m: [number, number][]; use_epc: boolean };

export type PatternMode = "linear" | "rectilinear" | "irregular" | "circular" | "cylindrical";

/** Scan pattern in the server's config schema; fields depend on mode. */
export interface PatternConfig {
  mode: PatternMode;
  dx_m?: number;
  dy_m?: number;
  nx?: number;
  ny?: number;
  extent_x_m?: number;
  extent_y_m?: number;
  dz_max_m?: number;
  count?: number;
  seed?: number;
  theta_max_rad?: number;
  n_theta?: number;
  radius_m?: number;
}

export interface ScenePoint {
  position_m: [number, number, number];
  reflectivity?: [number, number] | number;
}

export type SceneConfig =
  | { points: ScenePoint[] }
  | { letters: true }
  | { random: { count: number; bounds_m: [number, number][]; seed?: number } };

export interface DirtyFlags {
  beat: boolean;
  image: boolean;
}

export interface SessionView {
  waveform: WaveformConfig;
  array: ArrayConfig;
  pattern: PatternConfig & { num_poses: number };
  scene: SceneConfig;
  standoff_m: number;
  dirty: DirtyFlags;
  artifacts: { beat: boolean; image: boolean };
  busy: boolean;
}

export interface Derived {
  rangeResolution_m: number;
  bandwidth_Hz: number;
  wavelength_m: number;
  maxRange_m: number;
  maxPoseSpacing_m: number;
  crossRangeResolution_m: [number | null, number | null];
  apertureExtent_m: [number, number];
  numPoses: number;
}

export type Algorithm =
  | "bpa" | "rma" | "rma_linear" | "fft_planar" | "fft_linear"
  | "pfa_circular" | "pfa_cylindrical" | "empm";

export interface GridConfig {
  x_m: [number, number, number];
  y_m: [number, number, number];
  z_m: [number, number, number];
}

export interface ReconstructRequest {
  algorithm: Algorithm;
  grid: GridConfig;
  z_ref_m?: number;
  pitch_m?: number;
  threads?: number;
}

export interface SimulateResult {
  status: "done";
  kind: "simulate";
  num_poses: number;
  Nk: number;
  time_s: number;
  seed: number;
  stale: boolean;
}

export interface ReconstructResult {
  status: "done";
  kind: "reconstruct";
  algorithm: Algorithm;
  peak_m: number[];
  peak_value: number;
  shape: number[];
  time_s: number;
  stale: boolean;
}

/** 202 body when the server queued the work instead of running it inline. */
export interface JobQueued {
  status: "running";
  job: string;
}

export interface JobStatus {
  id: string;
  kind: string;
  status: "running" | "done" | "error";
  result: Record<string, unknown> | null;
  error: string | null;
}

export interface ImageSlice {
  z_m: number;
  zIndex: number;
  dbMin: number;
  x_m: number[];
  y_m: number[];
  values_db: number[][];
  argmax_xy_m: [number, number];
  peak_value: number;
  stale: boolean;
}

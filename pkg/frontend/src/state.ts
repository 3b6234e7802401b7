/**
 * Session state for the workbench. One server session, one controller: it
 * mirrors /session and /derived, runs at most one compute at a time, and
 * notifies subscribers after every change so the DOM layer can re-render.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  ArrayConfig,
  Derived,
  ImageSlice,
  JobQueued,
  PatternConfig,
  ReconstructRequest,
  ReconstructResult,
  SceneConfig,
  SessionView,
  SimulateResult,
  WaveformConfig,
} from "./types.js";

export type SectionKind = "waveform" | "array" | "pattern" | "scene";

export type Listener = () => void;

interface SimulateOptions {
  seed?: number;
  threads?: number;
  snr_dB?: number;
}

export class Workbench {
  readonly api: ApiClient;
  session: SessionView | null = null;
  derived: Derived | null = null;
  slice: ImageSlice | null = null;
  lastSimulate: SimulateResult | null = null;
  lastReconstruct: ReconstructResult | null = null;
  lastError: ApiError | null = null;
  /** Which compute is in flight, if any. Runs are serialized through this. */
  running: "simulate" | "reconstruct" | null = null;
  /** Display threshold for the slice viewer, dBfs (negative). */
  dbMin = -40;
  sliceZ: number | null = null;

  private listeners = new Set<Listener>();

  constructor(api: ApiClient) {
    this.api = api;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** Run buttons stay disabled while anything is computing, here or server-side. */
  get canRun(): boolean {
    return this.running === null && !(this.session?.busy ?? false);
  }

  async refresh(): Promise<void> {
    this.session = await this.api.getSession();
    this.derived = await this.api.getDerived();
    this.emit();
  }

  /**
   * PUT one session section and re-sync. Returns false (with lastError set)
   * on a rejected payload so forms can stay on screen for a fix.
   */
  async putSection(
    kind: SectionKind,
    body: WaveformConfig | ArrayConfig | (PatternConfig & { standoff_m?: number }) | SceneConfig,
  ): Promise<boolean> {
    try {
      if (kind === "waveform") await this.api.putWaveform(body as WaveformConfig);
      else if (kind === "array") await this.api.putArray(body as ArrayConfig);
      else if (kind === "pattern") {
        await this.api.putPattern(body as PatternConfig & { standoff_m?: number });
      } else await this.api.putScene(body as SceneConfig);
      this.lastError = null;
    } catch (err) {
      if (!(err instanceof ApiError)) throw err;
      this.lastError = err;
      this.emit();
      return false;
    }
    await this.refresh();
    return true;
  }

  async runSimulate(options: SimulateOptions = {}): Promise<boolean> {
    return this.runCompute("simulate", async () => {
      const result = await this.settle(await this.api.simulate(options));
      this.lastSimulate = result as unknown as SimulateResult;
    });
  }

  async runReconstruct(request: ReconstructRequest): Promise<boolean> {
    return this.runCompute("reconstruct", async () => {
      const result = await this.settle(await this.api.reconstruct(request));
      this.lastReconstruct = result as unknown as ReconstructResult;
      this.slice = null;
    });
  }

  async loadSlice(): Promise<boolean> {
    try {
      const params: { z?: number; dbMin?: number } = { dbMin: this.dbMin };
      if (this.sliceZ !== null) params.z = this.sliceZ;
      this.slice = await this.api.getImageSlice(params);
      this.lastError = null;
    } catch (err) {
      if (!(err instanceof ApiError)) throw err;
      this.lastError = err;
      this.emit();
      return false;
    }
    this.emit();
    return true;
  }

  setDbMin(dbMin: number): void {
    this.dbMin = dbMin;
    this.emit();
  }

  private async runCompute(
    kind: "simulate" | "reconstruct",
    work: () => Promise<void>,
  ): Promise<boolean> {
    if (!this.canRun) return false;
    this.running = kind;
    this.emit();
    try {
      await work();
      this.lastError = null;
    } catch (err) {
      if (!(err instanceof ApiError)) throw err;
      this.lastError = err;
      return false;
    } finally {
      this.running = null;
      await this.refresh();
    }
    return true;
  }

  /** Inline results pass through; 202 responses are polled to completion. */
  private async settle(
    response: SimulateResult | ReconstructResult | JobQueued,
  ): Promise<Record<string, unknown>> {
    if (response.status === "done") return response as unknown as Record<string, unknown>;
    const job = await this.api.waitForJob(response.job);
    return { status: "done", ...(job.result ?? {}) };
  }
}

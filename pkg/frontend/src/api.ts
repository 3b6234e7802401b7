/**
 * Typed client for the imaging service. Every call is a plain fetch; errors
 * carry the server's field path so panels can point at the offending input.
 */

import type {
  ArrayConfig,
  Derived,
  DirtyFlags,
  ImageSlice,
  JobQueued,
  JobStatus,
  PatternConfig,
  ReconstructRequest,
  ReconstructResult,
  SceneConfig,
  SessionView,
  SimulateResult,
  WaveformConfig,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly path: string | null;

  constructor(status: number, message: string, path: string | null = null) {
    super(message);
    this.status = status;
    this.path = path;
  }
}

interface PutAck {
  ok: boolean;
  dirty: DirtyFlags;
}

async function parseError(response: Response): Promise<ApiError> {
  let message = `${response.status} ${response.statusText}`;
  let path: string | null = null;
  try {
    const body = await response.json();
    const detail = body?.detail ?? body;
    if (typeof detail?.message === "string") message = detail.message;
    if (typeof detail?.path === "string") path = detail.path;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, message, path);
}

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchFn: typeof fetch;

  constructor(baseUrl: string, fetchFn: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok && response.status !== 202) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  private async requestText(path: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) throw await parseError(response);
    return response.text();
  }

  getSession(): Promise<SessionView> {
    return this.request("GET", "/session");
  }

  getDerived(): Promise<Derived> {
    return this.request("GET", "/derived");
  }

  putWaveform(body: WaveformConfig): Promise<PutAck> {
    return this.request("PUT", "/session/waveform", body);
  }

  putArray(body: ArrayConfig): Promise<PutAck> {
    return this.request("PUT", "/session/array", body);
  }

  putPattern(body: PatternConfig & { standoff_m?: number }): Promise<PutAck> {
    return this.request("PUT", "/session/pattern", body);
  }

  putScene(body: SceneConfig): Promise<PutAck> {
    return this.request("PUT", "/session/scene", body);
  }

  simulate(body: { seed?: number; threads?: number; snr_dB?: number } = {}):
      Promise<SimulateResult | JobQueued> {
    return this.request("POST", "/session/simulate", body);
  }

  reconstruct(body: ReconstructRequest): Promise<ReconstructResult | JobQueued> {
    return this.request("POST", "/session/reconstruct", body);
  }

  getJob(id: string): Promise<JobStatus> {
    return this.request("GET", `/session/jobs/${id}`);
  }

  /** Poll a queued job until it settles; rejects if the job errored. */
  async waitForJob(id: string, intervalMs = 250): Promise<JobStatus> {
    for (;;) {
      const job = await this.getJob(id);
      if (job.status === "done") return job;
      if (job.status === "error") {
        throw new ApiError(500, job.error ?? "job failed");
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  getImageSlice(params: { z?: number; dbMin?: number } = {}): Promise<ImageSlice> {
    const q = new URLSearchParams();
    if (params.z !== undefined) q.set("z", String(params.z));
    if (params.dbMin !== undefined) q.set("dbMin", String(params.dbMin));
    const suffix = q.size > 0 ? `?${q.toString()}` : "";
    return this.request("GET", `/artifacts/image-slice${suffix}`);
  }

  getPosesCsv(): Promise<string> {
    return this.requestText("/artifacts/poses.csv");
  }

  getPsfCsv(): Promise<string> {
    return this.requestText("/artifacts/psf.csv");
  }
}

/** Parse the poses.csv artifact into coordinate triples. */
export function parsePosesCsv(text: string): { x: number; y: number; z: number }[] {
  const lines = text.trim().split("\n");
  const out: { x: number; y: number; z: number }[] = [];
  for (const line of lines.slice(1)) {
    const [x, y, z] = line.split(",").map(Number);
    if (x === undefined || y === undefined || z === undefined) continue;
    if (Number.isNaN(x) || Number.isNaN(y) || Number.isNaN(z)) continue;
    out.push({ x, y, z });
  }
  return out;
}

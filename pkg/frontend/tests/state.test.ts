import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Workbench } from "../src/state.js";
import type { Derived, SessionView } from "../src/types.js";

const SESSION: SessionView = {
  waveform: { f0_Hz: 77e9, K_Hz_per_s: 70.295e12, Nk: 64, fS_Hz: 1124720, fC_Hz: 79e9 },
  array: { mode: "monostatic" },
  pattern: { mode: "rectilinear", nx: 8, ny: 8, dx_m: 0.001, dy_m: 0.001, num_poses: 64 },
  scene: { points: [{ position_m: [0, 0, 0] }] },
  standoff_m: 0.5,
  dirty: { beat: true, image: true },
  artifacts: { beat: false, image: false },
  busy: false,
};

const DERIVED: Derived = {
  rangeResolution_m: 0.0375,
  bandwidth_Hz: 4e9,
  wavelength_m: 0.003794841240506329,
  maxRange_m: 3.1992,
  maxPoseSpacing_m: 0.0009487103101265823,
  crossRangeResolution_m: [0.02, 0.02],
  apertureExtent_m: [0.007, 0.007],
  numPoses: 64,
};

type Handler = () => Response | Promise<Response>;

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** Route-table fetch stub; counts hits per route. */
function makeBench(routes: Record<string, Handler>): { bench: Workbench; hits: Map<string, number> } {
  const hits = new Map<string, number>();
  const fetchFn = (async (url: RequestInfo | URL, init?: RequestInit) => {
    const { pathname } = new URL(String(url));
    const key = `${init?.method ?? "GET"} ${pathname}`;
    hits.set(key, (hits.get(key) ?? 0) + 1);
    const handler = routes[key];
    if (!handler) throw new Error(`no route for ${key}`);
    return handler();
  }) as typeof fetch;
  const bench = new Workbench(new ApiClient("http://x:1", fetchFn));
  return { bench, hits };
}

const baseRoutes: Record<string, Handler> = {
  "GET /session": () => jsonResponse(200, SESSION),
  "GET /derived": () => jsonResponse(200, DERIVED),
};

describe("refresh", () => {
  it("mirrors /session and /derived and notifies subscribers", async () => {
    const { bench } = makeBench(baseRoutes);
    let renders = 0;
    bench.subscribe(() => { renders += 1; });
    await bench.refresh();
    expect(bench.session?.pattern.num_poses).toBe(64);
    expect(bench.derived?.rangeResolution_m).toBe(0.0375);
    expect(renders).toBe(1);
  });
});

describe("putSection", () => {
  it("PUTs then re-syncs on success", async () => {
    const { bench, hits } = makeBench({
      ...baseRoutes,
      "PUT /session/scene": () =>
        jsonResponse(200, { ok: true, dirty: { beat: true, image: true } }),
    });
    const ok = await bench.putSection("scene", { letters: true });
    expect(ok).toBe(true);
    expect(bench.lastError).toBeNull();
    expect(hits.get("PUT /session/scene")).toBe(1);
    expect(hits.get("GET /session")).toBe(1);
  });

  it("keeps the rejection and skips the re-sync on a 400", async () => {
    const { bench, hits } = makeBench({
      ...baseRoutes,
      "PUT /session/waveform": () =>
        jsonResponse(400, { detail: { path: "waveform.Nk", message: "Nk must be positive" } }),
    });
    const ok = await bench.putSection("waveform",
      { f0_Hz: 77e9, K_Hz_per_s: 70.295e12, Nk: -1, fS_Hz: 1e6, fC_Hz: 79e9 });
    expect(ok).toBe(false);
    expect(bench.lastError?.status).toBe(400);
    expect(bench.lastError?.path).toBe("waveform.Nk");
    expect(hits.get("GET /session")).toBeUndefined();
  });
});

describe("runSimulate", () => {
  const simResult = {
    status: "done", kind: "simulate", num_poses: 64, Nk: 64, time_s: 0.1, seed: 3, stale: false,
  };

  it("runs one compute at a time", async () => {
    let release!: () => void;
    const gate = new Promise<void>((resolve) => { release = resolve; });
    const { bench, hits } = makeBench({
      ...baseRoutes,
      "POST /session/simulate": async () => {
        await gate;
        return jsonResponse(200, simResult);
      },
    });
    const first = bench.runSimulate({ seed: 3 });
    expect(bench.running).toBe("simulate");
    expect(bench.canRun).toBe(false);
    const second = await bench.runSimulate({ seed: 4 });
    expect(second).toBe(false); // rejected locally, no second request
    release();
    expect(await first).toBe(true);
    expect(bench.running).toBeNull();
    expect(hits.get("POST /session/simulate")).toBe(1);
    expect(bench.lastSimulate?.num_poses).toBe(64);
  });

  it("polls a 202 job to completion", async () => {
    let polls = 0;
    const { bench } = makeBench({
      ...baseRoutes,
      "POST /session/simulate": () => jsonResponse(202, { status: "running", job: "job-9" }),
      "GET /session/jobs/job-9": () => {
        polls += 1;
        const status = polls < 2 ? "running" : "done";
        const result = polls < 2 ? null : { kind: "simulate", num_poses: 64, Nk: 64,
                                            time_s: 0.5, seed: 0, stale: false };
        return jsonResponse(200, { id: "job-9", kind: "simulate", status, result, error: null });
      },
    });
    const ok = await bench.runSimulate();
    expect(ok).toBe(true);
    expect(polls).toBe(2);
    expect(bench.lastSimulate?.Nk).toBe(64);
  });

  it("defers to a busy server", async () => {
    const { bench, hits } = makeBench({
      ...baseRoutes,
      "GET /session": () => jsonResponse(200, { ...SESSION, busy: true }),
    });
    await bench.refresh();
    expect(bench.canRun).toBe(false);
    expect(await bench.runSimulate()).toBe(false);
    expect(hits.get("POST /session/simulate")).toBeUndefined();
  });
});

describe("runReconstruct", () => {
  const request = {
    algorithm: "bpa" as const,
    grid: { x_m: [-0.03, 0.03, 13] as [number, number, number],
            y_m: [-0.03, 0.03, 13] as [number, number, number],
            z_m: [0.48, 0.52, 5] as [number, number, number] },
  };

  it("records the rejection when the beat cube is stale", async () => {
    const { bench } = makeBench({
      ...baseRoutes,
      "POST /session/reconstruct": () =>
        jsonResponse(409, { detail: { path: null, message: "beat signal is stale" } }),
    });
    const ok = await bench.runReconstruct(request);
    expect(ok).toBe(false);
    expect(bench.lastError?.status).toBe(409);
    expect(bench.running).toBeNull(); // released even on failure
  });

  it("stores the result and drops the old slice", async () => {
    const { bench } = makeBench({
      ...baseRoutes,
      "POST /session/reconstruct": () =>
        jsonResponse(200, { status: "done", kind: "reconstruct", algorithm: "bpa",
                            peak_m: [0, 0, 0.5], peak_value: 1, shape: [13, 13, 5],
                            time_s: 0.2, stale: false }),
    });
    bench.slice = {} as never;
    const ok = await bench.runReconstruct(request);
    expect(ok).toBe(true);
    expect(bench.lastReconstruct?.peak_m).toEqual([0, 0, 0.5]);
    expect(bench.slice).toBeNull();
  });
});

describe("loadSlice", () => {
  it("requests the current display threshold and z plane", async () => {
    const urls: string[] = [];
    const fetchFn = (async (url: RequestInfo | URL) => {
      urls.push(String(url));
      return jsonResponse(200, {
        z_m: 0.5, zIndex: 2, dbMin: -55, x_m: [0], y_m: [0], values_db: [[0]],
        argmax_xy_m: [0, 0], peak_value: 1, stale: false,
      });
    }) as typeof fetch;
    const bench = new Workbench(new ApiClient("http://x:1", fetchFn));
    bench.setDbMin(-55);
    bench.sliceZ = 0.5;
    const ok = await bench.loadSlice();
    expect(ok).toBe(true);
    expect(bench.slice?.dbMin).toBe(-55);
    expect(urls[0]).toBe("http://x:1/artifacts/image-slice?z=0.5&dbMin=-55");
  });
});

/**
 * End-to-end flow against the real imaging service: configure the session
 * through the five panels' requests, simulate, reconstruct, and view a
 * slice, asserting the same invariants the UI renders from.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError, parsePosesCsv } from "../src/api.js";
import { formatLength } from "../src/format.js";
import { countAboveThreshold } from "../src/heatmap.js";
import { scanRows, stageLamps, waveformRows } from "../src/panels.js";

const PORT = 8490 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

const WAVEFORM = { f0_Hz: 77e9, K_Hz_per_s: 70.295e12, Nk: 64, fS_Hz: 1124720.0, fC_Hz: 79e9 };
const PITCH = 0.0009487103101265823; // quarter wavelength at 79 GHz
const GRID = {
  x_m: [-0.03, 0.03, 13] as [number, number, number],
  y_m: [-0.03, 0.03, 13] as [number, number, number],
  z_m: [0.44, 0.56, 13] as [number, number, number],
};

let server: ChildProcess;
const api = new ApiClient(BASE);

beforeAll(async () => {
  server = spawn("python3", [
    "-c",
    "import uvicorn; from nearsar.server import create_app; " +
      `uvicorn.run(create_app(), host='127.0.0.1', port=${PORT}, log_level='warning')`,
  ], { stdio: ["ignore", "pipe", "pipe"] });
  const stderr: string[] = [];
  server.stderr?.on("data", (chunk: Buffer) => stderr.push(chunk.toString()));
  const deadline = Date.now() + 45_000;
  for (;;) {
    try {
      await api.getSession();
      return;
    } catch {
      if (server.exitCode !== null) {
        throw new Error(`service exited: ${stderr.join("")}`);
      }
      if (Date.now() > deadline) {
        throw new Error(`service never came up: ${stderr.join("")}`);
      }
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
});

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("workbench flow against the live service", () => {
  it("configures waveform, array, scan, and scene", async () => {
    expect((await api.putWaveform(WAVEFORM)).ok).toBe(true);
    expect((await api.putArray({ mode: "monostatic" })).ok).toBe(true);
    const ack = await api.putPattern({
      mode: "rectilinear", dx_m: PITCH, dy_m: PITCH, nx: 24, ny: 24, standoff_m: 0,
    });
    expect(ack.dirty).toEqual({ beat: true, image: true });
    await api.putScene({ points: [{ position_m: [0, 0, 0.5], reflectivity: 1 }] });
  });

  it("panels echo GET /derived, which owns all physics", async () => {
    const derived = await api.getDerived();
    expect(derived.rangeResolution_m).toBeCloseTo(0.03747405725, 12);
    expect(derived.maxPoseSpacing_m).toBeCloseTo(PITCH, 15);
    expect(derived.numPoses).toBe(576);
    expect(derived.apertureExtent_m[0]).toBeCloseTo(23 * PITCH, 12);

    const rows = new Map(waveformRows(derived).map((r) => [r.label, r.value]));
    expect(rows.get("Range resolution δz")).toBe(formatLength(derived.rangeResolution_m));
    expect(rows.get("Max pose spacing λc/4")).toBe(formatLength(derived.maxPoseSpacing_m));
    expect(rows.get("Max unambiguous range")).toBe(formatLength(derived.maxRange_m));
    const scan = new Map(scanRows(derived).map((r) => [r.label, r.value]));
    expect(scan.get("Poses")).toBe("576");
    expect(scan.get("Aperture extent x")).toBe(formatLength(derived.apertureExtent_m[0]));
  });

  it("serves the virtual aperture as CSV for the scan plot", async () => {
    const poses = parsePosesCsv(await api.getPosesCsv());
    expect(poses.length).toBe(576);
    for (const p of poses) expect(p.z).toBe(0);
    const xs = new Set(poses.map((p) => p.x));
    expect(xs.size).toBe(24);
  });

  it("shows both stages missing before any compute", async () => {
    const session = await api.getSession();
    expect(session.artifacts).toEqual({ beat: false, image: false });
    expect(stageLamps(session).map((l) => l.state)).toEqual(["missing", "missing"]);
  });

  it("simulates inline and clears the beat dirty flag", async () => {
    const result = await api.simulate({ seed: 0, threads: 1 });
    expect(result.status).toBe("done");
    if (result.status !== "done") return;
    expect(result.kind).toBe("simulate");
    expect(result.num_poses).toBe(576);
    expect(result.Nk).toBe(64);
    expect(result.stale).toBe(false);

    const session = await api.getSession();
    expect(session.dirty.beat).toBe(false);
    expect(session.dirty.image).toBe(true); // no image yet
    expect(stageLamps(session)[0]).toEqual({ name: "beat", state: "fresh" });
  });

  it("reconstructs and finds the point at its true position", async () => {
    const result = await api.reconstruct({ algorithm: "bpa", grid: GRID, threads: 1 });
    expect(result.status).toBe("done");
    if (result.status !== "done") return;
    expect(result.algorithm).toBe("bpa");
    expect(result.shape).toEqual([13, 13, 13]);
    expect(result.peak_m[0]).toBeCloseTo(0, 9);
    expect(result.peak_m[1]).toBeCloseTo(0, 9);
    expect(result.peak_m[2]).toBeCloseTo(0.5, 9);

    const session = await api.getSession();
    expect(session.dirty).toEqual({ beat: false, image: false });
    expect(stageLamps(session).map((l) => l.state)).toEqual(["fresh", "fresh"]);
  });

  it("slices the image with the peak on axis", async () => {
    const slice = await api.getImageSlice({ z: 0.5, dbMin: -60 });
    expect(slice.z_m).toBeCloseTo(0.5, 9);
    expect(slice.zIndex).toBe(6);
    expect(slice.x_m.length).toBe(13);
    expect(slice.y_m.length).toBe(13);
    expect(slice.values_db.length).toBe(13);
    expect(slice.values_db[0]!.length).toBe(13);
    expect(slice.argmax_xy_m[0]).toBeCloseTo(0, 9);
    expect(slice.argmax_xy_m[1]).toBeCloseTo(0, 9);
    expect(slice.stale).toBe(false);
  });

  it("raising the display floor monotonically shrinks the lit pixel set", async () => {
    const slice = await api.getImageSlice({ z: 0.5, dbMin: -80 });
    const thresholds = [-80, -60, -40, -20, -10, -5, -1];
    const counts = thresholds.map((t) => countAboveThreshold(slice.values_db, t));
    for (let i = 1; i < counts.length; i += 1) {
      expect(counts[i]!).toBeLessThanOrEqual(counts[i - 1]!);
    }
    expect(counts[counts.length - 1]!).toBeGreaterThanOrEqual(1); // the peak itself
    expect(counts[0]!).toBeGreaterThan(counts[counts.length - 1]!); // sidelobes exist
  });

  it("marks everything stale when the scene changes, and blocks reconstruct", async () => {
    await api.putScene({ points: [{ position_m: [0.01, 0, 0.5], reflectivity: 1 }] });
    const session = await api.getSession();
    expect(session.dirty).toEqual({ beat: true, image: true });
    expect(stageLamps(session).map((l) => l.state)).toEqual(["stale", "stale"]);

    const slice = await api.getImageSlice({ z: 0.5 });
    expect(slice.stale).toBe(true);

    const err = await api
      .reconstruct({ algorithm: "bpa", grid: GRID, threads: 1 })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
  });

  it("rejects bad section payloads with a field path", async () => {
    const err = await api
      .putWaveform({ ...WAVEFORM, Nk: -1 })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).path).toBe("waveform.Nk");
  });

  it("queues oversized computes as jobs and polls them to done", async () => {
    // 16384 poses x 64 samples x 20 targets crosses the inline threshold
    await api.putPattern({
      mode: "rectilinear", dx_m: PITCH, dy_m: PITCH, nx: 128, ny: 128, standoff_m: 0,
    });
    await api.putScene({
      random: {
        count: 20,
        bounds_m: [[-0.05, 0.05], [-0.05, 0.05], [0.45, 0.55]],
        seed: 1,
      },
    });
    const queued = await api.simulate({ seed: 0, threads: 1 });
    expect(queued.status).toBe("running");
    if (queued.status !== "running") return;
    const job = await api.waitForJob(queued.job, 100);
    expect(job.status).toBe("done");
    expect(job.result?.["num_poses"]).toBe(16384);
    const session = await api.getSession();
    expect(session.artifacts.beat).toBe(true);
    expect(session.dirty.beat).toBe(false);
  });
});

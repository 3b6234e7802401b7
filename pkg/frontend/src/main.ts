/**
 * DOM wiring for the five-panel workbench. All physics numbers shown here
 * come from the service (/derived, /artifacts); this file only moves them
 * between fetch responses and elements.
 */

import { ApiClient, ApiError, parsePosesCsv } from "./api.js";
import { formatDb, formatLength, formatSeconds } from "./format.js";
import { countAboveThreshold, rasterize } from "./heatmap.js";
import {
  arrayElements,
  compatibleAlgorithms,
  describePattern,
  scanRows,
  stageLamps,
  virtualElements,
  waveformRows,
} from "./panels.js";
import { layoutScatter, ticks } from "./scatter.js";
import { Workbench } from "./state.js";
import type {
  Algorithm,
  ArrayConfig,
  GridConfig,
  PatternConfig,
  PatternMode,
  SceneConfig,
  ScenePoint,
} from "./types.js";

const api = new ApiClient("");
const bench = new Workbench(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const input = (id: string): HTMLInputElement => el<HTMLInputElement>(id);
const select = (id: string): HTMLSelectElement => el<HTMLSelectElement>(id);

function num(id: string): number {
  const raw = input(id).value.trim();
  const value = Number(raw);
  if (raw === "" || Number.isNaN(value)) throw new Error(`${id}: not a number`);
  return value;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

function renderRows(id: string, rows: { label: string; value: string }[]): void {
  const body = el<HTMLTableSectionElement>(id);
  body.replaceChildren(
    ...rows.map((row) => {
      const tr = document.createElement("tr");
      const th = document.createElement("th");
      th.textContent = row.label;
      const td = document.createElement("td");
      td.textContent = row.value;
      tr.append(th, td);
      return tr;
    }),
  );
}

function showError(err: unknown): void {
  if (err instanceof ApiError) {
    setText("error-line", err.path ? `${err.path}: ${err.message}` : err.message);
  } else {
    setText("error-line", String(err));
  }
  el("error-line").classList.add("visible");
}

function clearError(): void {
  setText("error-line", "");
  el("error-line").classList.remove("visible");
}

/* ---- waveform panel ---- */

function fillWaveformForm(): void {
  if (!bench.session) return;
  const w = bench.session.waveform;
  input("wf-f0").value = String(w.f0_Hz / 1e9);
  input("wf-k").value = String(w.K_Hz_per_s / 1e12);
  input("wf-nk").value = String(w.Nk);
  input("wf-fs").value = String(w.fS_Hz);
  input("wf-fc").value = String(w.fC_Hz / 1e9);
}

async function applyWaveform(): Promise<void> {
  await bench.putSection("waveform", {
    f0_Hz: num("wf-f0") * 1e9,
    K_Hz_per_s: num("wf-k") * 1e12,
    Nk: num("wf-nk"),
    fS_Hz: num("wf-fs"),
    fC_Hz: num("wf-fc") * 1e9,
  });
}

/* ---- array panel ---- */

function readArrayForm(): ArrayConfig {
  if (select("array-mode").value === "monostatic") return { mode: "monostatic" };
  const parse = (id: string): [number, number][] => {
    const rows = JSON.parse(el<HTMLTextAreaElement>(id).value) as unknown;
    if (!Array.isArray(rows)) throw new Error(`${id}: expected [[x, y], ...]`);
    return rows as [number, number][];
  };
  return {
    mode: "mimo",
    tx_m: parse("array-tx"),
    rx_m: parse("array-rx"),
    use_epc: input("array-epc").checked,
  };
}

function renderArray(): void {
  if (!bench.session) return;
  const cfg = bench.session.array;
  el("array-mimo-fields").classList.toggle("hidden", cfg.mode !== "mimo");
  const elements = arrayElements(cfg);
  const body = el<HTMLTableSectionElement>("array-table");
  body.replaceChildren(
    ...elements.map((e) => {
      const tr = document.createElement("tr");
      for (const cell of [e.kind, formatLength(e.x_m), formatLength(e.y_m)]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.append(td);
      }
      return tr;
    }),
  );
  drawArrayPlot(cfg);
}

function drawArrayPlot(cfg: ArrayConfig): void {
  const canvas = el<HTMLCanvasElement>("array-plot");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const showVirtual = input("array-virtual").checked;
  const physical = arrayElements(cfg).map((e) => ({ x: e.x_m, y: e.y_m, z: 0, kind: e.kind }));
  const virtual = showVirtual
    ? virtualElements(cfg).map((e) => ({ x: e.x_m, y: e.y_m, z: 0, kind: "virtual" }))
    : [];
  const all = [...physical, ...virtual];
  const layout = layoutScatter(all, canvas.width, canvas.height);
  all.forEach((p, i) => {
    ctx.fillStyle = p.kind === "tx" ? "#e4572e" : p.kind === "rx" ? "#4ea8de" : "#9b9b9b";
    ctx.beginPath();
    ctx.arc(layout.px[i]!, layout.py[i]!, p.kind === "virtual" ? 2.5 : 4, 0, 2 * Math.PI);
    ctx.fill();
  });
}

/* ---- scan panel ---- */

const PATTERN_FIELDS: Record<PatternMode, string[]> = {
  rectilinear: ["scan-dx", "scan-dy", "scan-nx", "scan-ny"],
  linear: ["scan-dy", "scan-ny"],
  irregular: ["scan-ex", "scan-ey", "scan-dzmax", "scan-count", "scan-seed"],
  circular: ["scan-thetamax", "scan-ntheta", "scan-radius"],
  cylindrical: ["scan-ntheta", "scan-radius", "scan-dy", "scan-ny"],
};

function syncScanFields(): void {
  const mode = select("scan-mode").value as PatternMode;
  const active = new Set(PATTERN_FIELDS[mode]);
  for (const row of document.querySelectorAll<HTMLElement>("#panel-scan .field")) {
    const forInput = row.dataset["field"];
    if (forInput && forInput.startsWith("scan-") && forInput !== "scan-standoff") {
      row.classList.toggle("hidden", !active.has(forInput));
    }
  }
}

function readPatternForm(): PatternConfig & { standoff_m: number } {
  const mode = select("scan-mode").value as PatternMode;
  const base = { mode, standoff_m: num("scan-standoff") };
  switch (mode) {
    case "rectilinear":
      return { ...base, dx_m: num("scan-dx"), dy_m: num("scan-dy"),
               nx: num("scan-nx"), ny: num("scan-ny") };
    case "linear":
      return { ...base, dy_m: num("scan-dy"), ny: num("scan-ny") };
    case "irregular":
      return { ...base, extent_x_m: num("scan-ex"), extent_y_m: num("scan-ey"),
               dz_max_m: num("scan-dzmax"), count: num("scan-count"), seed: num("scan-seed") };
    case "circular":
      return { ...base, theta_max_rad: num("scan-thetamax"), n_theta: num("scan-ntheta"),
               radius_m: num("scan-radius") };
    case "cylindrical":
      return { ...base, n_theta: num("scan-ntheta"), radius_m: num("scan-radius"),
               dy_m: num("scan-dy"), ny: num("scan-ny") };
  }
}

async function renderPoses(): Promise<void> {
  try {
    const poses = parsePosesCsv(await api.getPosesCsv());
    const canvas = el<HTMLCanvasElement>("scan-plot");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const layout = layoutScatter(poses, canvas.width, canvas.height);
    const zs = poses.map((p) => p.z);
    const zLo = Math.min(...zs, 0);
    const zHi = Math.max(...zs, zLo + 1e-12);
    poses.forEach((p, i) => {
      // z encoded as brightness so irregular tracks read at a glance
      const t = (p.z - zLo) / (zHi - zLo);
      const shade = Math.round(110 + 130 * t);
      ctx.fillStyle = `rgb(${shade}, ${shade}, 90)`;
      ctx.fillRect(layout.px[i]! - 1.5, layout.py[i]! - 1.5, 3, 3);
    });
    ctx.fillStyle = "#888";
    ctx.font = "10px sans-serif";
    for (const t of ticks(layout.xDomain[0], layout.xDomain[1], 4)) {
      ctx.fillText(formatLength(t, 2), 4, 12);
      break; // left edge label only; full axes would crowd the thumbnail
    }
  } catch {
    // no poses yet; leave the canvas blank
  }
}

/* ---- target panel ---- */

function readSceneForm(): SceneConfig {
  const kind = select("scene-kind").value;
  if (kind === "letters") return { letters: true };
  if (kind === "random") {
    return {
      random: {
        count: num("scene-count"),
        bounds_m: [
          [num("scene-xlo"), num("scene-xhi")],
          [num("scene-ylo"), num("scene-yhi")],
          [num("scene-zlo"), num("scene-zhi")],
        ],
        seed: num("scene-seed"),
      },
    };
  }
  const points = JSON.parse(el<HTMLTextAreaElement>("scene-points").value) as ScenePoint[];
  return { points };
}

function syncSceneFields(): void {
  const kind = select("scene-kind").value;
  el("scene-points-field").classList.toggle("hidden", kind !== "points");
  el("scene-random-fields").classList.toggle("hidden", kind !== "random");
}

/** Local CSV (x,y,z[,amp]) -> explicit point list; nothing touches the disk server-side. */
function pointsFromCsv(text: string): ScenePoint[] {
  const out: ScenePoint[] = [];
  for (const line of text.trim().split("\n")) {
    const cells = line.split(",").map((c) => Number(c.trim()));
    if (cells.length < 3 || cells.slice(0, 3).some(Number.isNaN)) continue;
    const point: ScenePoint = { position_m: [cells[0]!, cells[1]!, cells[2]!] };
    if (cells.length > 3 && !Number.isNaN(cells[3]!)) point.reflectivity = cells[3]!;
    out.push(point);
  }
  return out;
}

/* ---- reconstruct panel ---- */

function readGrid(): GridConfig {
  const triple = (axis: string): [number, number, number] => [
    num(`grid-${axis}lo`), num(`grid-${axis}hi`), num(`grid-${axis}n`),
  ];
  return { x_m: triple("x"), y_m: triple("y"), z_m: triple("z") };
}

function syncAlgorithms(): void {
  if (!bench.session) return;
  const mode = bench.session.pattern.mode;
  const options = compatibleAlgorithms(mode);
  const node = select("recon-algorithm");
  const current = node.value;
  node.replaceChildren(
    ...options.map((algo) => {
      const o = document.createElement("option");
      o.value = algo;
      o.textContent = algo;
      return o;
    }),
  );
  node.value = options.includes(current as Algorithm) ? current : options[0]!;
}

async function runReconstruct(): Promise<void> {
  const request = {
    algorithm: select("recon-algorithm").value as Algorithm,
    grid: readGrid(),
    threads: 1,
  };
  const ok = await bench.runReconstruct(request);
  if (ok && bench.lastReconstruct) {
    const r = bench.lastReconstruct;
    setText("recon-status",
      `${r.algorithm}: peak ${r.peak_value.toExponential(3)} at ` +
      `(${r.peak_m.map((v) => formatLength(v, 3)).join(", ")}) ` +
      `in ${formatSeconds(r.time_s)}`);
    await bench.loadSlice();
  }
}

function renderSlice(): void {
  const canvas = el<HTMLCanvasElement>("slice-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx || !bench.slice) return;
  const raster = rasterize(bench.slice, bench.dbMin);
  canvas.width = raster.width;
  canvas.height = raster.height;
  ctx.putImageData(new ImageData(raster.pixels, raster.width, raster.height), 0, 0);
  const above = countAboveThreshold(bench.slice.values_db, bench.dbMin);
  const [ax, ay] = bench.slice.argmax_xy_m;
  setText("slice-info",
    `z = ${formatLength(bench.slice.z_m)} · floor ${formatDb(bench.dbMin, 0)} · ` +
    `${above} px above · peak at (${formatLength(ax)}, ${formatLength(ay)})` +
    (bench.slice.stale ? " · STALE" : ""));
}

/* ---- top-level render ---- */

function render(): void {
  if (bench.session) {
    setText("scan-desc", describePattern(bench.session.pattern));
    setText("scan-npose", `${bench.session.pattern.num_poses} poses`);
    for (const lamp of stageLamps(bench.session)) {
      const node = el(`lamp-${lamp.name}`);
      node.dataset["state"] = lamp.state;
      node.title = `${lamp.name}: ${lamp.state}`;
    }
    syncAlgorithms();
    renderArray();
  }
  if (bench.derived) {
    renderRows("waveform-rows", waveformRows(bench.derived));
    renderRows("scan-rows", scanRows(bench.derived));
  }
  const busy = !bench.canRun;
  for (const id of ["btn-simulate", "btn-reconstruct"]) {
    el<HTMLButtonElement>(id).disabled = busy;
  }
  el("busy-line").classList.toggle("visible", bench.running !== null);
  setText("busy-line", bench.running ? `running ${bench.running}…` : "");
  if (bench.lastError) showError(bench.lastError);
  else clearError();
  renderSlice();
}

function wire(): void {
  bench.subscribe(render);

  el("wf-apply").addEventListener("click", () => void applyWaveform().catch(showError));
  el("array-apply").addEventListener("click", () => {
    try {
      void bench.putSection("array", readArrayForm());
    } catch (err) {
      showError(err);
    }
  });
  input("array-virtual").addEventListener("change", () => {
    if (bench.session) drawArrayPlot(bench.session.array);
  });
  select("array-mode").addEventListener("change", () => {
    el("array-mimo-fields").classList.toggle(
      "hidden", select("array-mode").value !== "mimo");
  });

  select("scan-mode").addEventListener("change", syncScanFields);
  el("scan-apply").addEventListener("click", () => {
    try {
      void bench.putSection("pattern", readPatternForm()).then((ok) => {
        if (ok) return renderPoses();
        return undefined;
      });
    } catch (err) {
      showError(err);
    }
  });

  select("scene-kind").addEventListener("change", syncSceneFields);
  el("scene-apply").addEventListener("click", () => {
    try {
      void bench.putSection("scene", readSceneForm());
    } catch (err) {
      showError(err);
    }
  });
  input("scene-file").addEventListener("change", () => {
    const file = input("scene-file").files?.[0];
    if (!file) return;
    void file.text().then((text) => {
      const points = pointsFromCsv(text);
      el<HTMLTextAreaElement>("scene-points").value = JSON.stringify(points, null, 1);
      select("scene-kind").value = "points";
      syncSceneFields();
    });
  });

  el("btn-simulate").addEventListener("click", () => {
    void bench.runSimulate({ seed: num("sim-seed"), threads: 1 }).then((ok) => {
      if (ok && bench.lastSimulate) {
        setText("recon-status",
          `simulated ${bench.lastSimulate.num_poses} poses × ` +
          `${bench.lastSimulate.Nk} samples in ${formatSeconds(bench.lastSimulate.time_s)}`);
      }
    });
  });
  el("btn-reconstruct").addEventListener("click", () => void runReconstruct().catch(showError));

  input("slice-dbmin").addEventListener("input", () => {
    bench.setDbMin(Number(input("slice-dbmin").value));
    setText("slice-dbmin-label", formatDb(bench.dbMin, 0));
  });
  input("slice-z").addEventListener("change", () => {
    bench.sliceZ = input("slice-z").value === "" ? null : Number(input("slice-z").value);
    void bench.loadSlice();
  });
}

async function start(): Promise<void> {
  wire();
  await bench.refresh();
  fillWaveformForm();
  syncScanFields();
  syncSceneFields();
  await renderPoses();
}

void start().catch(showError);

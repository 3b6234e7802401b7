import { describe, expect, it } from "vitest";

import { layoutScatter, ticks } from "../src/scatter.js";

describe("layoutScatter", () => {
  it("keeps the aspect ratio square", () => {
    const points = [
      { x: -0.1, y: -0.05, z: 0 },
      { x: 0.1, y: 0.05, z: 0 },
    ];
    const layout = layoutScatter(points, 200, 200);
    const dxPixels = layout.px[1]! - layout.px[0]!;
    const dyPixels = layout.py[0]! - layout.py[1]!; // canvas y grows downward
    // 0.2 m across x vs 0.1 m across y must land 2:1 on screen too
    expect(dxPixels / dyPixels).toBeCloseTo(2, 6);
  });

  it("centers a degenerate linear track", () => {
    const points = [0, 1, 2, 3].map((i) => ({ x: 0, y: i * 0.001, z: 0 }));
    const layout = layoutScatter(points, 100, 100);
    for (const v of layout.px) expect(v).toBeCloseTo(50, 6);
    expect(Math.min(...layout.py)).toBeGreaterThan(0);
    expect(Math.max(...layout.py)).toBeLessThan(100);
  });

  it("survives an empty pose list", () => {
    const layout = layoutScatter([], 100, 100);
    expect(layout.px.length).toBe(0);
    expect(layout.xDomain[0]).toBeLessThan(layout.xDomain[1]);
  });
});

describe("ticks", () => {
  it("uses 1-2-5 steps and snaps zero", () => {
    const got = ticks(-0.06, 0.06, 5);
    expect(got).toContain(0);
    expect(got.length).toBeGreaterThanOrEqual(3);
    expect(got.length).toBeLessThanOrEqual(7);
    const steps = got.slice(1).map((v, i) => v - got[i]!);
    for (const s of steps) expect(s).toBeCloseTo(steps[0]!, 9);
  });

  it("degenerates to one tick when the span is empty", () => {
    expect(ticks(0.25, 0.25)).toEqual([0.25]);
  });
});

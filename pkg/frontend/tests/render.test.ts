import { describe, expect, it } from "vitest";

import {
  droneColor,
  legendPages,
  makeCamera,
  markerRadius,
  scaleOf,
  worldToScreen,
} from "../src/render.js";

describe("worldToScreen", () => {
  const cam = makeCamera(800, 600);

  it("puts the world origin at the canvas center", () => {
    expect(worldToScreen([0, 0, 0], cam)).toEqual([400, 300]);
  });

  it("maps +x to screen-up and +y to screen-left (north-up view)", () => {
    const [, upY] = worldToScreen([1, 0, 0], cam);
    expect(upY).toBeLessThan(300);
    const [leftX] = worldToScreen([0, 1, 0], cam);
    expect(leftX).toBeLessThan(400);
  });

  it("ignores altitude for placement", () => {
    expect(worldToScreen([1, 1, 0], cam)).toEqual(worldToScreen([1, 1, 3], cam));
  });

  it("keeps the arena inside the margin at any aspect ratio", () => {
    for (const [w, h] of [[800, 600], [600, 800], [300, 1000]] as const) {
      const c = makeCamera(w, h);
      const s = scaleOf(c);
      const [ax, ay] = c.arena;
      expect((ay / 2) * s).toBeLessThanOrEqual(w / 2 - c.margin + 1e-9);
      expect((ax / 2) * s).toBeLessThanOrEqual(h / 2 - c.margin + 1e-9);
    }
  });
});

describe("markerRadius", () => {
  it("grows with altitude", () => {
    expect(markerRadius(1.0)).toBeGreaterThan(markerRadius(0.5));
  });

  it("clamps to the visible range", () => {
    expect(markerRadius(-10)).toBe(3);
    expect(markerRadius(100)).toBe(16);
    expect(markerRadius(1)).toBe(8);
  });
});

describe("legendPages", () => {
  it("splits sixteen drones into two full pages", () => {
    const ids = Array.from({ length: 16 }, (_, i) => `drone_${i}`);
    const pages = legendPages(ids);
    expect(pages).toHaveLength(2);
    expect(pages[0]).toHaveLength(8);
    expect(pages[1]).toHaveLength(8);
    expect(pages[0][0]).toBe("drone_0");
    expect(pages[1][0]).toBe("drone_8");
  });

  it("leaves a partial last page", () => {
    const pages = legendPages(["a", "b", "c"], 2);
    expect(pages).toEqual([["a", "b"], ["c"]]);
  });

  it("yields one empty page when no drones exist yet", () => {
    expect(legendPages([])).toEqual([[]]);
  });
});

describe("droneColor", () => {
  it("assigns distinct colors within a page and cycles beyond it", () => {
    const first = Array.from({ length: 8 }, (_, i) => droneColor(i));
    expect(new Set(first).size).toBe(8);
    expect(droneColor(8)).toBe(droneColor(0));
    expect(droneColor(13)).toBe(droneColor(5));
  });
});

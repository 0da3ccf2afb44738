import { describe, expect, it } from "vitest";
import {
  cursorToHumanFrontal,
  makePane,
  pxToWorld,
  scrollDepth,
  worldToPx,
} from "../src/transforms.js";

describe("pane transform", () => {
  const pane = makePane(520, 460, 700);

  it("canvas center maps to (0, z0) at the configured origin", () => {
    const [y, z] = pxToWorld(pane, 260, 230);
    expect(y).toBeCloseTo(0, 12);
    const z0 = (pane.originY - 230) / pane.pxPerMeter;
    expect(z).toBeCloseTo(z0, 12);
    expect(z0).toBeLessThan(0); // center of the pane sits below the shoulder
  });

  it("world/pixel round trip", () => {
    const [px, py] = worldToPx(pane, 0.12, -0.2);
    const [y, z] = pxToWorld(pane, px, py);
    expect(y).toBeCloseTo(0.12, 12);
    expect(z).toBeCloseTo(-0.2, 12);
  });

  it("z is up: larger pixel y means lower world z", () => {
    const [, zTop] = pxToWorld(pane, 100, 50);
    const [, zBottom] = pxToWorld(pane, 100, 400);
    expect(zTop).toBeGreaterThan(zBottom);
  });

  it("cursor scales robot-frame meters into human-frame targets", () => {
    const ratio = 0.61 / 0.35;
    const [px, py] = worldToPx(pane, 0.1, -0.15);
    const [hy, hz] = cursorToHumanFrontal(pane, px, py, ratio);
    expect(hy).toBeCloseTo(0.1 * ratio, 10);
    expect(hz).toBeCloseTo(-0.15 * ratio, 10);
  });
});

describe("scroll depth", () => {
  it("moves monotonically with scroll steps", () => {
    let d = 0.1;
    d = scrollDepth(d, 1, 0.01, -0.6, 0.6);
    expect(d).toBeCloseTo(0.11);
    d = scrollDepth(d, -3, 0.01, -0.6, 0.6);
    expect(d).toBeCloseTo(0.08);
  });

  it("clamps at the configured bounds", () => {
    expect(scrollDepth(0.59, 5, 0.01, -0.6, 0.6)).toBe(0.6);
    expect(scrollDepth(-0.59, -5, 0.01, -0.6, 0.6)).toBe(-0.6);
  });
});

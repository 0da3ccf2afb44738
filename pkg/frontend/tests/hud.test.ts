import { describe, expect, it } from "vitest";
import { RunningStats, formatReaction, statsLine, trialLine } from "../src/hud.js";

describe("running stats", () => {
  it("two-point population standard deviation", () => {
    const s = new RunningStats();
    s.push(0.4);
    s.push(0.6);
    expect(s.mean).toBeCloseTo(0.5, 12);
    expect(s.sd).toBeCloseTo(0.1, 12); // population convention, like the server
  });

  it("empty stats report null", () => {
    const s = new RunningStats();
    expect(s.mean).toBeNull();
    expect(s.sd).toBeNull();
    expect(statsLine(s)).toBe("reaction: -");
  });

  it("reset clears history", () => {
    const s = new RunningStats();
    s.push(1.0);
    s.reset();
    expect(s.count).toBe(0);
  });
});

describe("formatting", () => {
  it("reaction times render in milliseconds", () => {
    expect(formatReaction(0.537)).toBe("537 ms");
    expect(formatReaction(null)).toBe("-");
  });

  it("trial line shows progress", () => {
    expect(trialLine(null)).toBe("no trial");
    expect(trialLine({ kind: "rxns", hits_done: 3, hits_required: 10 })).toBe(
      "rxns: 3/10 hits",
    );
  });
});

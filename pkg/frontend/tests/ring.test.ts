import { describe, expect, it } from "vitest";

import { ChartSeries } from "../src/ring.js";

function point(subframe: number) {
  return { subframe, dlSnrDb: 1, slSnrDb: 2, throughputBps: 100, mode: "downlink" };
}

describe("ChartSeries", () => {
  it("keeps at most capacity points, dropping the oldest", () => {
    const s = new ChartSeries(3);
    for (const t of [1, 2, 3, 4, 5]) s.push(point(t));
    expect(s.all().map((p) => p.subframe)).toEqual([3, 4, 5]);
  });

  it("rejects non-increasing time", () => {
    const s = new ChartSeries(10);
    s.push(point(5));
    expect(() => s.push(point(5))).toThrow();
    expect(() => s.push(point(4))).toThrow();
  });

  it("rejects zero capacity", () => {
    expect(() => new ChartSeries(0)).toThrow();
  });
});

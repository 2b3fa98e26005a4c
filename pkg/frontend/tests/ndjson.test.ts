import { describe, expect, it } from "vitest";

import { NdjsonParser, serialize } from "../src/ndjson.js";

describe("NdjsonParser", () => {
  it("parses complete lines", () => {
    const p = new NdjsonParser();
    expect(p.feed('{"a":1}\n{"b":2}\n')).toEqual([{ a: 1 }, { b: 2 }]);
  });

  it("holds partial lines across chunks", () => {
    const p = new NdjsonParser();
    expect(p.feed('{"a"')).toEqual([]);
    expect(p.pending()).toBeGreaterThan(0);
    expect(p.feed(':1}\n')).toEqual([{ a: 1 }]);
    expect(p.pending()).toBe(0);
  });

  it("skips blank lines", () => {
    const p = new NdjsonParser();
    expect(p.feed("\n\n{\"a\":1}\n\n")).toEqual([{ a: 1 }]);
  });

  it("throws on malformed json", () => {
    const p = new NdjsonParser();
    expect(() => p.feed("not json\n")).toThrow();
  });

  it("serialize appends exactly one newline", () => {
    expect(serialize({ a: 1 })).toBe('{"a":1}\n');
  });
});

import { describe, expect, it } from "vitest";

import {
  FrameDecoder,
  MAX_FRAME_BYTES,
  canonicalJson,
  encodeFrame,
} from "../src/protocol.js";

describe("canonicalJson", () => {
  it("sorts keys and stays compact", () => {
    expect(canonicalJson({ b: 1, a: [true, null, "x"] })).toBe(
      '{"a":[true,null,"x"],"b":1}',
    );
  });

  it("sorts nested object keys too", () => {
    expect(canonicalJson({ z: { b: 2, a: 1 }, a: 0 })).toBe(
      '{"a":0,"z":{"a":1,"b":2}}',
    );
  });

  it("rejects non-finite numbers", () => {
    expect(() => canonicalJson({ x: Infinity })).toThrow();
    expect(() => canonicalJson({ x: NaN })).toThrow();
  });
});

describe("frame encoding and decoding", () => {
  it("round-trips a message", () => {
    const msg = { seq: 1, kind: "play", payload: {} };
    const dec = new FrameDecoder();
    const out = dec.feed(encodeFrame(msg));
    expect(out).toEqual([msg]);
    expect(dec.pendingBytes).toBe(0);
  });

  it("reassembles frames fed one byte at a time", () => {
    const msg = { seq: 7, kind: "set_time", payload: { time: 1.25 } };
    const bytes = encodeFrame(msg);
    const dec = new FrameDecoder();
    const got: unknown[] = [];
    for (const b of bytes) {
      got.push(...dec.feed(new Uint8Array([b])));
    }
    expect(got).toEqual([msg]);
  });

  it("splits two frames arriving in one chunk", () => {
    const a = encodeFrame({ seq: 1, ok: true, result: {} });
    const b = encodeFrame({ kind: "stats", payload: { step: 3 } });
    const joined = new Uint8Array(a.length + b.length);
    joined.set(a, 0);
    joined.set(b, a.length);
    const dec = new FrameDecoder();
    const got = dec.feed(joined);
    expect(got).toHaveLength(2);
    expect(got[0]).toEqual({ seq: 1, ok: true, result: {} });
    expect(got[1]).toEqual({ kind: "stats", payload: { step: 3 } });
  });

  it("rejects frames above the size cap", () => {
    const header = new Uint8Array(4);
    new DataView(header.buffer).setUint32(0, MAX_FRAME_BYTES + 1, false);
    const dec = new FrameDecoder();
    expect(() => dec.feed(header)).toThrow(/frame/i);
  });

  it("refuses to encode oversized frames", () => {
    const big = { kind: "load", payload: { data: "x".repeat(MAX_FRAME_BYTES) } };
    expect(() => encodeFrame(big)).toThrow(/frame/i);
  });

  it("notices a connection dropped mid-frame", () => {
    const bytes = encodeFrame({ seq: 2, kind: "pause", payload: {} });
    const dec = new FrameDecoder();
    dec.feed(bytes.subarray(0, bytes.length - 1));
    expect(dec.pendingBytes).toBeGreaterThan(0);
    expect(() => dec.end()).toThrow(/mid-frame|incomplete/i);
  });

  it("length prefix is big-endian", () => {
    const bytes = encodeFrame({ kind: "x" });
    const body = bytes.length - 4;
    expect([...bytes.subarray(0, 4)]).toEqual([
      (body >>> 24) & 0xff,
      (body >>> 16) & 0xff,
      (body >>> 8) & 0xff,
      body & 0xff,
    ]);
  });
});

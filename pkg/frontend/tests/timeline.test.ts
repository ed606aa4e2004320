import { describe, expect, it } from "vitest";

import {
  clampTime,
  hasKeyframeAt,
  keyframeCommands,
  keyframeTimes,
  pixelToTime,
  playPauseCommand,
  ribbonedObjects,
  scrubCommand,
  timeToPixel,
} from "../src/timeline.js";
import { IDENTITY, makeDoc, makeObject } from "./fixtures.js";

function keyframedDoc() {
  const kf = (time: number) => ({
    time,
    transform: IDENTITY,
    color: { rgb: [0.8, 0.8, 0.8] as [number, number, number] },
    group: null,
    visible: true,
  });
  return makeDoc([
    makeObject(1, IDENTITY, { keyframes: [kf(0), kf(2.5)] }),
    makeObject(2, IDENTITY, { keyframes: [kf(2.5), kf(7)] }),
    makeObject(3),
  ]);
}

describe("scrubbing", () => {
  it("emits set_time with the value clamped into the document range", () => {
    expect(scrubCommand(2.5, 10)).toEqual({ kind: "set_time", payload: { time: 2.5 } });
    expect(scrubCommand(-1, 10).payload["time"]).toBe(0);
    expect(scrubCommand(99, 10).payload["time"]).toBe(10);
    expect(scrubCommand(Number.NaN, 10).payload["time"]).toBe(0);
  });

  it("clampTime holds the playhead inside [0, duration]", () => {
    expect(clampTime(5, 10)).toBe(5);
    expect(clampTime(-0.001, 10)).toBe(0);
    expect(clampTime(10.001, 10)).toBe(10);
  });
});

describe("keyframe button", () => {
  it("captures each selected object at the server's playhead", () => {
    const cmds = keyframeCommands([4, 9]);
    expect(cmds).toEqual([
      { kind: "set_keyframe", payload: { id: 4 } },
      { kind: "set_keyframe", payload: { id: 9 } },
    ]);
    // time stays out of the payload: the server stamps its own playhead
    expect(cmds.every((c) => !("time" in c.payload))).toBe(true);
  });

  it("does nothing for an empty selection", () => {
    expect(keyframeCommands([])).toEqual([]);
  });
});

describe("play and pause", () => {
  it("toggles off the current playing state", () => {
    expect(playPauseCommand(false)).toEqual({ kind: "play", payload: {} });
    expect(playPauseCommand(true)).toEqual({ kind: "pause", payload: {} });
  });
});

describe("ribbon markers", () => {
  it("marks exactly the objects holding a keyframe at the playhead", () => {
    const doc = keyframedDoc();
    expect(ribbonedObjects(doc, 2.5)).toEqual(new Set([1, 2]));
    expect(ribbonedObjects(doc, 0)).toEqual(new Set([1]));
    expect(ribbonedObjects(doc, 1.3)).toEqual(new Set());
  });

  it("hasKeyframeAt tolerates only sub-epsilon drift", () => {
    const doc = keyframedDoc();
    const obj = doc.objects[0]!;
    expect(hasKeyframeAt(obj, 2.5 + 1e-12, 1e-9)).toBe(true);
    expect(hasKeyframeAt(obj, 2.51)).toBe(false);
  });

  it("collects distinct sorted keyframe times for the strip", () => {
    expect(keyframeTimes(keyframedDoc())).toEqual([0, 2.5, 7]);
  });
});

describe("strip geometry", () => {
  it("maps times to pixels and back", () => {
    expect(timeToPixel(5, 10, 300)).toBe(150);
    expect(pixelToTime(150, 10, 300)).toBe(5);
    expect(timeToPixel(99, 10, 300)).toBe(300); // clamped
    expect(pixelToTime(-20, 10, 300)).toBe(0);
    expect(timeToPixel(3, 0, 300)).toBe(0); // zero-duration degenerate
  });
});

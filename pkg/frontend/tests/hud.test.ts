import { describe, expect, it } from "vitest";

import {
  ToastQueue,
  connectionBanner,
  selectionLabel,
  setModeCommand,
  statusLine,
  toggleCollisionsCommand,
  toggleSpringsCommand,
} from "../src/hud.js";
import { makeStats, makeStatus } from "./fixtures.js";

describe("mode buttons", () => {
  it("sends only the axis that was pressed", () => {
    expect(setModeCommand("pose", undefined)).toEqual({
      kind: "set_mode",
      payload: { physics: "pose" },
    });
    expect(setModeCommand(undefined, "animate")).toEqual({
      kind: "set_mode",
      payload: { interaction: "animate" },
    });
  });

  it("toggles omit the flag so the server flips its own state", () => {
    expect(toggleCollisionsCommand()).toEqual({ kind: "toggle_collisions", payload: {} });
    expect(toggleSpringsCommand()).toEqual({ kind: "toggle_springs", payload: {} });
  });
});

describe("toasts", () => {
  it("expire after their ttl and keep order", () => {
    const q = new ToastQueue();
    q.push("first", 1000);
    q.push("second", 2000);
    expect(q.active(2500).map((t) => t.message)).toEqual(["first", "second"]);
    expect(q.active(5500).map((t) => t.message)).toEqual(["second"]);
    expect(q.active(10000)).toEqual([]);
  });
});

describe("banner and labels", () => {
  it("banner only shows when disconnected", () => {
    expect(connectionBanner(true)).toBeNull();
    expect(connectionBanner(false)).toMatch(/connection lost/);
  });

  it("status line reflects server truth", () => {
    const line = statusLine(
      makeStatus({ physics_mode: "pose", playing: true, time: 1.5 }),
      makeStats(),
    );
    expect(line).toContain("physics pose");
    expect(line).toContain("t=1.50 playing");
  });

  it("selection label counts", () => {
    expect(selectionLabel([])).toBe("nothing selected");
    expect(selectionLabel([4])).toBe("object 4");
    expect(selectionLabel([1, 2, 3])).toBe("3 selected");
  });
});

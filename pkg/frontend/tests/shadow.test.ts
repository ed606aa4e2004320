import { describe, expect, it } from "vitest";

import {
  DEFAULT_MARGIN,
  SHADOW_LIFT,
  footprintCenter,
  groundPlaneY,
  projectVertex,
  scaleFootprint,
  shadowMatrixElements,
} from "../src/shadow.js";
import type { Vec3 } from "../src/math.js";

describe("ground plane", () => {
  it("hangs a margin below the lowest point of the scene", () => {
    expect(groundPlaneY(0)).toBe(-DEFAULT_MARGIN);
    expect(groundPlaneY(-2.25)).toBe(-2.25 - DEFAULT_MARGIN);
    expect(groundPlaneY(3, 1)).toBe(2);
  });
});

describe("shadow projection", () => {
  it("preserves x and z exactly, bit for bit", () => {
    // awkward floats chosen so any arithmetic detour would change bits
    const samples: Vec3[] = [
      [0.1 + 0.2, 5.5, -0.30000000000000004],
      [-1e-17, 0, 1e300],
      [123.456789e-7, -44, -123.456789e+7],
      [-0, 2, 7.1],
    ];
    for (const v of samples) {
      const shadow = projectVertex(v, -0.5);
      expect(Object.is(shadow[0], v[0])).toBe(true);
      expect(Object.is(shadow[2], v[2])).toBe(true);
      expect(shadow[1]).toBe(-0.5 + SHADOW_LIFT);
    }
  });

  it("is independent of where the camera looks", () => {
    // the projection takes no camera argument at all; nail it down anyway
    const v: Vec3 = [1.25, 3, -9.75];
    expect(projectVertex(v, -1)).toEqual(projectVertex(v, -1));
  });

  it("footprint center sits under the object center", () => {
    const c = footprintCenter([2.5, 9, -3.5], -1);
    expect(c[0]).toBe(2.5);
    expect(c[2]).toBe(-3.5);
    expect(c[1]).toBe(-1 + SHADOW_LIFT);
  });
});

describe("shadow matrix", () => {
  it("matches projectVertex for every basis vector", () => {
    const planeY = -0.75;
    const m = shadowMatrixElements(planeY); // column-major
    const apply = (v: Vec3): Vec3 => [
      m[0]! * v[0] + m[4]! * v[1] + m[8]! * v[2] + m[12]!,
      m[1]! * v[0] + m[5]! * v[1] + m[9]! * v[2] + m[13]!,
      m[2]! * v[0] + m[6]! * v[1] + m[10]! * v[2] + m[14]!,
    ];
    const probes: Vec3[] = [
      [1, 0, 0],
      [0, 1, 0],
      [0, 0, 1],
      [3.25, -2, 8.5],
    ];
    for (const v of probes) {
      expect(apply(v)).toEqual(projectVertex(v, planeY));
    }
  });
});

describe("cursor footprint scaling", () => {
  it("scales x/z about the center and leaves y alone", () => {
    const center: Vec3 = [2, 0, -1];
    const p: Vec3 = [3, 0.001, -3];
    expect(scaleFootprint(p, center, 2)).toEqual([4, 0.001, -5]);
    // the center itself does not move
    expect(scaleFootprint(center, center, 1.6)).toEqual(center);
  });
});

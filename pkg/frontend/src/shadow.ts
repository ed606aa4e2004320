// Shadow plane rules. The light sits infinitely far away along the world up
// axis and never moves with the camera, so a shadow is just the vertex with
// its y replaced: x and z pass through untouched (same floats, no
// arithmetic). The plane hangs a margin below the lowest visible point,
// which keeps every shadow under every object.

import type { Vec3 } from "./math.js";

export const SHADOW_LIFT = 1e-3; // keeps shadow z-fighting off the plane
export const DEFAULT_MARGIN = 0.5;

export function groundPlaneY(sceneMinY: number, margin = DEFAULT_MARGIN): number {
  return sceneMinY - margin;
}

/** Project one world-space vertex onto the shadow plane. */
export function projectVertex(v: Vec3, planeY: number, lift = SHADOW_LIFT): Vec3 {
  return [v[0], planeY + lift, v[2]];
}

/**
 * Column-major 4x4 matrix for the same projection, for flattening whole
 * meshes on the GPU: x' = x, z' = z, y' = planeY + lift.
 */
export function shadowMatrixElements(planeY: number, lift = SHADOW_LIFT): number[] {
  // column-major: [m00 m10 m20 m30, m01 m11 ..., ...]
  return [
    1, 0, 0, 0,
    0, 0, 0, 0,
    0, 0, 1, 0,
    0, planeY + lift, 0, 1,
  ];
}

/** Shadow footprint center for an object: its translation, projected. */
export function footprintCenter(translation: Vec3, planeY: number): Vec3 {
  return projectVertex(translation, planeY);
}

/**
 * Cursor shadows are drawn darker and larger than object shadows so the
 * hands stay findable: scale up around the footprint center in the plane.
 */
export const CURSOR_SHADOW_SCALE = 1.6;
export const OBJECT_SHADOW_DARKNESS = 0.35; // alpha of ordinary shadows
export const CURSOR_SHADOW_DARKNESS = 0.6;

export function scaleFootprint(point: Vec3, center: Vec3, factor: number): Vec3 {
  return [
    center[0] + (point[0] - center[0]) * factor,
    point[1],
    center[2] + (point[2] - center[2]) * factor,
  ];
}

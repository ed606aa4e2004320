// Camera state and the screen-to-world mappings the drag controller needs.
// The camera orbits a target with world up fixed at +y; the light and the
// shadow plane never follow it.

import {
  Quat,
  qfromAxisAngle,
  qmul,
  qnormalize,
  qrotate,
  Vec3,
  vadd,
  vcross,
  vdot,
  vlength,
  vnormalize,
  vsub,
} from "./math.js";

export interface CameraState {
  position: Vec3;
  target: Vec3;
  up: Vec3;
  fovDegrees: number;
}

export function defaultCamera(): CameraState {
  // x aligned with the target: the view-plane right axis is exactly +x, so
  // a horizontal drag translates an object purely along x.
  return {
    position: [0, 3, 8],
    target: [0, 0, 0],
    up: [0, 1, 0],
    fovDegrees: 50,
  };
}

export interface ViewBasis {
  right: Vec3;
  up: Vec3;
  forward: Vec3; // unit vector from eye toward the target
}

export function viewBasis(cam: CameraState): ViewBasis {
  const forward = vnormalize(vsub(cam.target, cam.position));
  const right = vnormalize(vcross(forward, cam.up));
  const up = vcross(right, forward);
  return { right, up, forward };
}

export function viewDistance(cam: CameraState): number {
  return vlength(vsub(cam.target, cam.position));
}

/**
 * World length of one screen pixel on the plane through the target,
 * perpendicular to the view: the natural drag gain.
 */
export function worldPerPixel(cam: CameraState, viewportHeightPx: number): number {
  const half = (cam.fovDegrees * Math.PI) / 360;
  return (2 * viewDistance(cam) * Math.tan(half)) / viewportHeightPx;
}

/**
 * Shoemake arcball: map a normalized screen point (x, y in [-1, 1]) onto
 * the unit ball (z = sqrt(1 - r^2) inside, clamped to the equator outside).
 */
export function arcballVector(x: number, y: number): Vec3 {
  const r2 = x * x + y * y;
  if (r2 >= 1) {
    const r = Math.sqrt(r2);
    return [x / r, y / r, 0];
  }
  return [x, y, Math.sqrt(1 - r2)];
}

/**
 * Incremental arcball rotation between two normalized screen points, as a
 * quaternion in view coordinates (x right, y up, z toward the viewer).
 * Dragging straight across the whole ball accumulates to a half turn about
 * the axis perpendicular to the drag direction.
 */
export function arcballStep(x0: number, y0: number, x1: number, y1: number): Quat {
  const v0 = arcballVector(x0, y0);
  const v1 = arcballVector(x1, y1);
  const axis = vcross(v0, v1);
  const dot = Math.max(-1, Math.min(1, vdot(v0, v1)));
  const axisLen = vlength(axis);
  if (axisLen < 1e-12) return [1, 0, 0, 0]; // no motion (or a degenerate flip)
  return qfromAxisAngle(axis, Math.atan2(axisLen, dot));
}

/** Map a rotation expressed in view coordinates into world coordinates. */
export function viewToWorldRotation(q: Quat, basis: ViewBasis): Quat {
  // conjugate by the basis matrix: world = B * view * B^-1, done by rotating
  // the axis. q = [w, v]; world axis = v.x * right + v.y * up - v.z * forward
  // (view z looks toward the viewer, i.e. against forward).
  const [w, x, y, z] = q;
  const axis: Vec3 = [
    x * basis.right[0] + y * basis.up[0] - z * basis.forward[0],
    x * basis.right[1] + y * basis.up[1] - z * basis.forward[1],
    x * basis.right[2] + y * basis.up[2] - z * basis.forward[2],
  ];
  return qnormalize([w, axis[0], axis[1], axis[2]]);
}

/** Orbit the camera itself around its target (modifier-free right drag). */
export function orbitCamera(cam: CameraState, yawRadians: number, pitchRadians: number): CameraState {
  const offset = vsub(cam.position, cam.target);
  const yaw = qfromAxisAngle(cam.up, -yawRadians);
  const basis = viewBasis(cam);
  const pitch = qfromAxisAngle(basis.right, -pitchRadians);
  const q = qmul(yaw, pitch);
  const moved = qrotate(q, offset);
  return { ...cam, position: vadd(cam.target, moved) };
}

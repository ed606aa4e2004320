// Small vector/quaternion kit over plain arrays, matching the wire encoding
// ([w, x, y, z] quaternions, [x, y, z] vectors) so protocol values never
// need repacking before math is done on them.

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export function vadd(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function vsub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function vscale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function vdot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function vcross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function vlength(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function vnormalize(a: Vec3): Vec3 {
  const n = vlength(a);
  if (n === 0) throw new Error("cannot normalize a zero vector");
  return [a[0] / n, a[1] / n, a[2] / n];
}

export const QUAT_IDENTITY: Quat = [1, 0, 0, 0];

export function qmul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function qnormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (n === 0) throw new Error("cannot normalize a zero quaternion");
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function qfromAxisAngle(axis: Vec3, radians: number): Quat {
  const [x, y, z] = vnormalize(axis);
  const h = radians / 2;
  const s = Math.sin(h);
  return [Math.cos(h), x * s, y * s, z * s];
}

export function qrotate(q: Quat, v: Vec3): Vec3 {
  // v' = q v q*, expanded without building the conjugate
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + y * tz - z * ty,
    vy + w * ty + z * tx - x * tz,
    vz + w * tz + x * ty - y * tx,
  ];
}

/** Angle of the rotation a quaternion encodes, in [0, pi]. */
export function qangle(q: Quat): number {
  const w = Math.min(1, Math.abs(q[0]));
  return 2 * Math.acos(w);
}

/** Unit rotation axis, or null for the identity (axis undefined). */
export function qaxis(q: Quat): Vec3 | null {
  const n = Math.hypot(q[1], q[2], q[3]);
  if (n < 1e-12) return null;
  const s = q[0] >= 0 ? 1 / n : -1 / n; // report the [0, pi] form's axis
  return [q[1] * s, q[2] * s, q[3] * s];
}

"""Rigid transform algebra: vectors, unit quaternions, rigid transforms.

Conventions, fixed across the whole engine:
  * quaternions are stored (w, x, y, z), unit length, canonical sign
    (w >= 0; if w == 0 the first nonzero of x, y, z is >= 0)
  * compose(a, b) applies b first, then a (matrix convention a @ b)
  * every quaternion produced by an operation here is renormalized, so
    drift never accumulates across long composition chains
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple

EPS = 1e-9


class Vec3(NamedTuple):
    x: float
    y: float
    z: float


class UnitQuat(NamedTuple):
    w: float
    x: float
    y: float
    z: float


class RigidTransform(NamedTuple):
    rotation: UnitQuat
    translation: Vec3


ZERO3 = Vec3(0.0, 0.0, 0.0)


# -- vectors ------------------------------------------------------------------

def vadd(a: Vec3, b: Vec3) -> Vec3:
    return Vec3(a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vsub(a: Vec3, b: Vec3) -> Vec3:
    return Vec3(a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vscale(a: Vec3, s: float) -> Vec3:
    return Vec3(a[0] * s, a[1] * s, a[2] * s)


def vdot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vcross(a: Vec3, b: Vec3) -> Vec3:
    return Vec3(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vnorm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def vnormalize(a: Vec3) -> Vec3:
    n = vnorm(a)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return Vec3(a[0] / n, a[1] / n, a[2] / n)


def vlerp(a: Vec3, b: Vec3, u: float) -> Vec3:
    return Vec3(
        a[0] + (b[0] - a[0]) * u,
        a[1] + (b[1] - a[1]) * u,
        a[2] + (b[2] - a[2]) * u,
    )


def vfinite(a: Iterable[float]) -> bool:
    return all(math.isfinite(c) for c in a)


# -- quaternions ---------------------------------------------------------------

def quat_canonical(w: float, x: float, y: float, z: float) -> UnitQuat:
    """Renormalize and fix the sign ambiguity (q and -q are the same rotation)."""
    n2 = w * w + x * x + y * y + z * z
    if n2 == 0.0 or not math.isfinite(n2):
        raise ValueError("cannot normalize zero or non-finite quaternion")
    # skip the divide when already unit to the last ulp: keeps parse/serialize
    # round trips bit-exact while holding the norm within 1e-12 of 1 always
    if abs(n2 - 1.0) > 1e-12:
        n = math.sqrt(n2)
        w, x, y, z = w / n, x / n, y / n, z / n
    flip = False
    if w < 0.0:
        flip = True
    elif w == 0.0:
        if x < 0.0:
            flip = True
        elif x == 0.0:
            if y < 0.0:
                flip = True
            elif y == 0.0 and z < 0.0:
                flip = True
    if flip:
        w, x, y, z = -w, -x, -y, -z
    # adding 0.0 turns -0.0 into 0.0 so equal rotations serialize identically
    return UnitQuat(w + 0.0, x + 0.0, y + 0.0, z + 0.0)


QUAT_IDENTITY = UnitQuat(1.0, 0.0, 0.0, 0.0)


def quat_multiply(a: UnitQuat, b: UnitQuat) -> UnitQuat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return quat_canonical(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q: UnitQuat) -> UnitQuat:
    return quat_canonical(q[0], -q[1], -q[2], -q[3])


def quat_from_axis_angle(axis: Vec3, radians: float) -> UnitQuat:
    ux, uy, uz = vnormalize(axis)
    h = 0.5 * radians
    s = math.sin(h)
    return quat_canonical(math.cos(h), ux * s, uy * s, uz * s)


def quat_rotate(q: UnitQuat, v: Vec3) -> Vec3:
    """Rotate v by q: v + 2w(u x v) + 2(u x (u x v)) with u = (x,y,z)."""
    w, x, y, z = q
    vx, vy, vz = v
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return Vec3(
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def quat_axis_angle(q: UnitQuat) -> tuple[Vec3, float]:
    """Rotation axis and angle in [0, pi]. Identity reports axis (1,0,0), angle 0."""
    w, x, y, z = q
    s = math.sqrt(x * x + y * y + z * z)
    if s < 1e-12:
        return Vec3(1.0, 0.0, 0.0), 0.0
    # canonical sign keeps w >= 0, so atan2 lands in (0, pi/2] and the
    # full angle in (0, pi]
    angle = 2.0 * math.atan2(s, w)
    return Vec3(x / s, y / s, z / s), angle


def quat_slerp(a: UnitQuat, b: UnitQuat, u: float) -> UnitQuat:
    """Shortest-arc spherical interpolation; exact at the endpoints."""
    if u == 0.0:
        return a
    if u == 1.0:
        return b
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    bw, bx, by, bz = b
    if dot < 0.0:
        dot = -dot
        bw, bx, by, bz = -bw, -bx, -by, -bz
    if dot > 1.0 - 1e-10:
        # nearly parallel: linear blend avoids a divide by sin(~0)
        return quat_canonical(
            a[0] + (bw - a[0]) * u,
            a[1] + (bx - a[1]) * u,
            a[2] + (by - a[2]) * u,
            a[3] + (bz - a[3]) * u,
        )
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    ca = math.sin((1.0 - u) * theta) / s
    cb = math.sin(u * theta) / s
    return quat_canonical(
        ca * a[0] + cb * bw,
        ca * a[1] + cb * bx,
        ca * a[2] + cb * by,
        ca * a[3] + cb * bz,
    )


def quat_to_matrix(q: UnitQuat) -> list[list[float]]:
    """3x3 rotation matrix, row major."""
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return [
        [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
        [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
        [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
    ]


def quat_from_matrix(m: list[list[float]]) -> UnitQuat:
    """Quaternion from a 3x3 rotation matrix (Shepperd's method)."""
    t = m[0][0] + m[1][1] + m[2][2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        return quat_canonical(
            0.25 * s,
            (m[2][1] - m[1][2]) / s,
            (m[0][2] - m[2][0]) / s,
            (m[1][0] - m[0][1]) / s,
        )
    if m[0][0] > m[1][1] and m[0][0] > m[2][2]:
        s = math.sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0
        return quat_canonical(
            (m[2][1] - m[1][2]) / s,
            0.25 * s,
            (m[0][1] + m[1][0]) / s,
            (m[0][2] + m[2][0]) / s,
        )
    if m[1][1] > m[2][2]:
        s = math.sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0
        return quat_canonical(
            (m[0][2] - m[2][0]) / s,
            (m[0][1] + m[1][0]) / s,
            0.25 * s,
            (m[1][2] + m[2][1]) / s,
        )
    s = math.sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0
    return quat_canonical(
        (m[1][0] - m[0][1]) / s,
        (m[0][2] + m[2][0]) / s,
        (m[1][2] + m[2][1]) / s,
        0.25 * s,
    )


# -- rigid transforms ----------------------------------------------------------

IDENTITY = RigidTransform(QUAT_IDENTITY, ZERO3)


def make_transform(rotation: UnitQuat, translation) -> RigidTransform:
    return RigidTransform(
        quat_canonical(*rotation), Vec3(*(float(c) for c in translation))
    )


def translation_of(x: float, y: float, z: float) -> RigidTransform:
    return RigidTransform(QUAT_IDENTITY, Vec3(float(x), float(y), float(z)))


def axis_angle_of(axis: Vec3, radians: float) -> RigidTransform:
    return RigidTransform(quat_from_axis_angle(axis, radians), ZERO3)


def apply_transform(t: RigidTransform, v: Vec3) -> Vec3:
    r = quat_rotate(t.rotation, v)
    tr = t.translation
    return Vec3(r[0] + tr[0], r[1] + tr[1], r[2] + tr[2])


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """a after b: (a . b)(v) == a(b(v))."""
    return RigidTransform(
        quat_multiply(a.rotation, b.rotation),
        apply_transform(a, b.translation),
    )


def inverse(t: RigidTransform) -> RigidTransform:
    qi = quat_conjugate(t.rotation)
    ti = quat_rotate(qi, t.translation)
    return RigidTransform(qi, Vec3(-ti[0] + 0.0, -ti[1] + 0.0, -ti[2] + 0.0))


def relative_transform(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """The step that carries a onto b: compose(a, result) == b."""
    return compose(inverse(a), b)


def transform_power(t: RigidTransform, k: int) -> RigidTransform:
    """k-fold self-composition by repeated multiplication; k == 0 is identity."""
    if k < 0:
        raise ValueError("negative power not defined for rigid transforms")
    out = IDENTITY
    for _ in range(k):
        out = compose(out, t)
    return out


def crystal_chain(
    t_a: RigidTransform, t_ab: RigidTransform, n: int
) -> list[RigidTransform]:
    """Transforms of n repeated copies: element 1 at t_a, each next one t_ab
    further along. Built incrementally, each element from the previous."""
    if n < 1:
        raise ValueError("chain needs at least one element")
    out = [t_a]
    for _ in range(n - 1):
        out.append(compose(out[-1], t_ab))
    return out


def transform_to_matrix(t: RigidTransform) -> list[list[float]]:
    """4x4 homogeneous matrix, row major."""
    m = quat_to_matrix(t.rotation)
    tx, ty, tz = t.translation
    return [
        [m[0][0], m[0][1], m[0][2], tx],
        [m[1][0], m[1][1], m[1][2], ty],
        [m[2][0], m[2][1], m[2][2], tz],
        [0.0, 0.0, 0.0, 1.0],
    ]


def transform_from_matrix(rows: list[list[float]], tol: float = 1e-6) -> RigidTransform:
    """Build from a 4x4 (or 3x4) homogeneous matrix; must be rigid within tol."""
    r = [row[:3] for row in rows[:3]]
    for i in range(3):
        for j in range(3):
            dot = sum(r[i][k] * r[j][k] for k in range(3))
            want = 1.0 if i == j else 0.0
            if abs(dot - want) > tol:
                raise ValueError("matrix is not orthonormal within tolerance")
    det = (
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
        - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    )
    if det < 0.0:
        raise ValueError("matrix has negative determinant (reflection)")
    q = quat_from_matrix(r)
    return RigidTransform(q, Vec3(rows[0][3], rows[1][3], rows[2][3]))


def transforms_close(a: RigidTransform, b: RigidTransform, tol: float = EPS) -> bool:
    """Componentwise comparison. q and -q encode one rotation, and canonical
    sign is discontinuous at w == 0, so compare against both signs of b."""
    direct = all(abs(ca - cb) <= tol for ca, cb in zip(a.rotation, b.rotation))
    flipped = all(abs(ca + cb) <= tol for ca, cb in zip(a.rotation, b.rotation))
    if not (direct or flipped):
        return False
    return all(abs(ca - cb) <= tol for ca, cb in zip(a.translation, b.translation))


# -- serialization helpers -----------------------------------------------------

def transform_to_json(t: RigidTransform) -> dict:
    return {
        "rotation": [t.rotation.w, t.rotation.x, t.rotation.y, t.rotation.z],
        "translation": [t.translation.x, t.translation.y, t.translation.z],
    }


def transform_from_json(data: dict) -> RigidTransform:
    rot = data["rotation"]
    tr = data["translation"]
    if len(rot) != 4 or len(tr) != 3:
        raise ValueError("transform must have rotation[4] and translation[3]")
    return RigidTransform(
        quat_canonical(float(rot[0]), float(rot[1]), float(rot[2]), float(rot[3])),
        Vec3(float(tr[0]), float(tr[1]), float(tr[2])),
    )

"""Keyframe interpolation primitives.

Positions travel along a centripetal Catmull-Rom spline (alpha = 0.5) through
the keyframe points, with clamped endpoints made by duplicating the first and
last points. Orientations take piecewise shortest-arc slerp. Two keyframes
degenerate to straight linear motion.
"""

from __future__ import annotations

from .transforms import Vec3, vlerp, vnorm, vsub


def _ratio(s: float, a: float, b: float) -> float:
    span = b - a
    if span <= 1e-12:
        return 0.0
    return (s - a) / span


def catmull_rom_segment(
    p0: Vec3, p1: Vec3, p2: Vec3, p3: Vec3, u: float
) -> Vec3:
    """Evaluate the segment between p1 and p2 at u in [0, 1].

    Knot spacing is centripetal (square root of chord length), which keeps
    the path inside the control polygon and free of cusps and
    self-intersections. Duplicated neighbors (clamped ends, repeated
    positions) collapse the affected knot spans; those stages fall back to
    the nearer point instead of dividing by zero.
    """
    if u <= 0.0:
        return p1
    if u >= 1.0:
        return p2
    t0 = 0.0
    t1 = t0 + vnorm(vsub(p1, p0)) ** 0.5
    t2 = t1 + vnorm(vsub(p2, p1)) ** 0.5
    t3 = t2 + vnorm(vsub(p3, p2)) ** 0.5
    if t2 - t1 <= 1e-12:
        return p1  # repeated keyframe position: nothing to travel
    s = t1 + u * (t2 - t1)
    a1 = vlerp(p0, p1, _ratio(s, t0, t1))
    a2 = vlerp(p1, p2, _ratio(s, t1, t2))
    a3 = vlerp(p2, p3, _ratio(s, t2, t3))
    b1 = vlerp(a1, a2, _ratio(s, t0, t2))
    b2 = vlerp(a2, a3, _ratio(s, t1, t3))
    return vlerp(b1, b2, _ratio(s, t1, t2))


def sample_path(points: list[Vec3], segment: int, u: float) -> Vec3:
    """Position on the whole keyframe path: segment i runs from point i to
    i+1; endpoints are clamped by duplication; two points mean linear."""
    n = len(points)
    if n == 0:
        raise ValueError("no points")
    if n == 1:
        return points[0]
    segment = max(0, min(segment, n - 2))
    if n == 2:
        return vlerp(points[0], points[1], u)
    p0 = points[segment - 1] if segment > 0 else points[0]
    p1 = points[segment]
    p2 = points[segment + 1]
    p3 = points[segment + 2] if segment + 2 < n else points[n - 1]
    return catmull_rom_segment(p0, p1, p2, p3, u)

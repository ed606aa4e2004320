"""Collision pipeline: sweep-and-prune broad phase, BVH narrow phase, exact
triangle-triangle tests, and the pose-mode pair reduction.

Pose mode only ever tests pairs that involve a manipulated object: m moving of
n total gives m(n-m) + m(m-1)/2 pair tests, never more than m*n. Replicated
chains cut their internal testing further: because every member sees the same
neighbor geometry, one pair per offset (the first member against each other
member) stands in for all pairs at that offset, O(n) instead of O(n^2).

Narrow-phase queries on distinct pairs are independent; this implementation
runs them sequentially in canonical pair order, which is also the
deterministic merge order any parallel schedule would have to reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from .bvh import BvhTree
from .errors import ChainInvariantViolated
from .meshes import LocalBox, world_aabb
from .transforms import (
    RigidTransform,
    Vec3,
    apply_transform,
    compose,
    inverse,
    quat_rotate,
    quat_to_matrix,
    relative_transform,
    transforms_close,
)

if TYPE_CHECKING:
    from .scene import SceneDoc

CandidatePair = tuple[int, int]

_EPS = 1e-12


def canonical_pair(a: int, b: int) -> CandidatePair:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class ContactReport:
    pair: CandidatePair
    triangle_pairs: tuple[tuple[int, int], ...]
    contact_normal: Vec3        # unit, points from the second object toward the first
    penetration_estimate: float
    contact_point: Vec3

    @property
    def colliding(self) -> bool:
        return len(self.triangle_pairs) > 0


@dataclass(frozen=True)
class CollisionStats:
    n_objects: int
    n_moving: int
    pair_tests_executed: int
    pairs_colliding: int
    broad_candidates: int

    def to_json(self) -> dict:
        return {
            "n_objects": self.n_objects,
            "n_moving": self.n_moving,
            "pair_tests_executed": self.pair_tests_executed,
            "pairs_colliding": self.pairs_colliding,
            "broad_candidates": self.broad_candidates,
        }


# -- exact triangle-triangle test ------------------------------------------------
#
# Interval overlap method: each triangle is cut by the other's plane; the two
# cut intervals on the shared plane-intersection line overlap iff the
# triangles intersect. Distances within _EPS of a plane are snapped to zero so
# touching counts as contact and the test stays stable for resting geometry.

def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _lerp3(a, b, t):
    return (
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    )


def _interval(lonely, va, vb, d_lonely, d_a, d_b, axis):
    """Parameter interval (projection on `axis`) plus 3D points where the
    edges lonely->va and lonely->vb cross the other plane."""
    t1 = d_lonely / (d_lonely - d_a)
    p1 = _lerp3(lonely, va, t1)
    t2 = d_lonely / (d_lonely - d_b)
    p2 = _lerp3(lonely, vb, t2)
    s1, s2 = p1[axis], p2[axis]
    if s1 <= s2:
        return s1, p1, s2, p2
    return s2, p2, s1, p1


def _pick_lonely(v0, v1, v2, d0, d1, d2):
    """Reorder so the first vertex is alone on its side of the plane.
    Returns None when all three distances are zero (coplanar)."""
    if d0 * d1 > 0.0:
        return v2, v0, v1, d2, d0, d1
    if d0 * d2 > 0.0:
        return v1, v0, v2, d1, d0, d2
    if d1 * d2 > 0.0 or d0 != 0.0:
        return v0, v1, v2, d0, d1, d2
    if d1 != 0.0:
        return v1, v0, v2, d1, d0, d2
    if d2 != 0.0:
        return v2, v0, v1, d2, d0, d1
    return None


def _snap(d):
    return 0.0 if -_EPS < d < _EPS else d


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _point_in_tri2(p, a, b, c):
    d1 = _cross2(a, b, p)
    d2 = _cross2(b, c, p)
    d3 = _cross2(c, a, p)
    has_neg = (d1 < -_EPS) or (d2 < -_EPS) or (d3 < -_EPS)
    has_pos = (d1 > _EPS) or (d2 > _EPS) or (d3 > _EPS)
    return not (has_neg and has_pos)


def _segments_cross2(p, q, a, b):
    d1 = _cross2(a, b, p)
    d2 = _cross2(a, b, q)
    d3 = _cross2(p, q, a)
    d4 = _cross2(p, q, b)
    if ((d1 > _EPS and d2 < -_EPS) or (d1 < -_EPS and d2 > _EPS)) and (
        (d3 > _EPS and d4 < -_EPS) or (d3 < -_EPS and d4 > _EPS)
    ):
        return True

    def on_seg(a2, b2, p2):
        return (
            min(a2[0], b2[0]) - _EPS <= p2[0] <= max(a2[0], b2[0]) + _EPS
            and min(a2[1], b2[1]) - _EPS <= p2[1] <= max(a2[1], b2[1]) + _EPS
        )

    if abs(d1) <= _EPS and on_seg(a, b, p):
        return True
    if abs(d2) <= _EPS and on_seg(a, b, q):
        return True
    if abs(d3) <= _EPS and on_seg(p, q, a):
        return True
    if abs(d4) <= _EPS and on_seg(p, q, b):
        return True
    return False


def _coplanar_overlap(n, t1, t2):
    # project out the dominant normal axis and run the 2D tests
    ax, ay, az = abs(n[0]), abs(n[1]), abs(n[2])
    if ax >= ay and ax >= az:
        keep = (1, 2)
    elif ay >= az:
        keep = (0, 2)
    else:
        keep = (0, 1)
    u = [(v[keep[0]], v[keep[1]]) for v in t1]
    w = [(v[keep[0]], v[keep[1]]) for v in t2]
    for i in range(3):
        for j in range(3):
            if _segments_cross2(u[i], u[(i + 1) % 3], w[j], w[(j + 1) % 3]):
                return True
    if _point_in_tri2(u[0], *w):
        return True
    if _point_in_tri2(w[0], *u):
        return True
    return False


def tri_tri_intersect(p0, p1, p2, q0, q1, q2):
    """Exact intersection of two triangles.

    Returns None if disjoint, ("coplanar",) for overlapping coplanar
    triangles, or ("segment", a, b) with the 3D endpoints of the shared
    segment (a == b for single-point touching).
    """
    n2 = _cross(_sub(q1, q0), _sub(q2, q0))
    d2c = -_dot(n2, q0)
    dp0 = _snap(_dot(n2, p0) + d2c)
    dp1 = _snap(_dot(n2, p1) + d2c)
    dp2 = _snap(_dot(n2, p2) + d2c)
    if (dp0 > 0.0 and dp1 > 0.0 and dp2 > 0.0) or (dp0 < 0.0 and dp1 < 0.0 and dp2 < 0.0):
        return None

    n1 = _cross(_sub(p1, p0), _sub(p2, p0))
    d1c = -_dot(n1, p0)
    dq0 = _snap(_dot(n1, q0) + d1c)
    dq1 = _snap(_dot(n1, q1) + d1c)
    dq2 = _snap(_dot(n1, q2) + d1c)
    if (dq0 > 0.0 and dq1 > 0.0 and dq2 > 0.0) or (dq0 < 0.0 and dq1 < 0.0 and dq2 < 0.0):
        return None

    first = _pick_lonely(p0, p1, p2, dp0, dp1, dp2)
    second = _pick_lonely(q0, q1, q2, dq0, dq1, dq2)
    if first is None or second is None:
        return ("coplanar",) if _coplanar_overlap(n2, (p0, p1, p2), (q0, q1, q2)) else None

    d = _cross(n1, n2)
    ax, ay, az = abs(d[0]), abs(d[1]), abs(d[2])
    if ax >= ay and ax >= az:
        axis = 0
    elif ay >= az:
        axis = 1
    else:
        axis = 2

    s1a, p1a, s1b, p1b = _interval(*first, axis)
    s2a, p2a, s2b, p2b = _interval(*second, axis)
    if s1a > s2b or s2a > s1b:
        return None
    # overlap of [s1a,s1b] and [s2a,s2b]: take the inner pair of points
    start = p1a if s1a >= s2a else p2a
    end = p1b if s1b <= s2b else p2b
    return ("segment", start, end)


# -- narrow phase ------------------------------------------------------------------

def _rotation_rows(t: RigidTransform):
    m = quat_to_matrix(t.rotation)
    return (tuple(m[0]), tuple(m[1]), tuple(m[2]))


def _transform_point(rows, tr, p):
    x, y, z = p
    return (
        rows[0][0] * x + rows[0][1] * y + rows[0][2] * z + tr[0],
        rows[1][0] * x + rows[1][1] * y + rows[1][2] * z + tr[1],
        rows[2][0] * x + rows[2][1] * y + rows[2][2] * z + tr[2],
    )


def narrow_phase(
    bvh_a: BvhTree,
    t_a: RigidTransform,
    bvh_b: BvhTree,
    t_b: RigidTransform,
    pair: CandidatePair = (0, 1),
) -> ContactReport | None:
    """Exact mesh-mesh contact via simultaneous hierarchy descent.

    All math happens in A's local frame: B's nodes and vertices are mapped
    through the relative transform, which keeps every box test axis-aligned
    on A's side and needs no re-transformation of A at all.
    """
    rel = compose(inverse(t_a), t_b)
    rows = _rotation_rows(rel)
    trans = tuple(rel.translation)
    # |R| for the center/half-extent box transform
    arows = (
        (abs(rows[0][0]), abs(rows[0][1]), abs(rows[0][2])),
        (abs(rows[1][0]), abs(rows[1][1]), abs(rows[1][2])),
        (abs(rows[2][0]), abs(rows[2][1]), abs(rows[2][2])),
    )

    nodes_a = bvh_a.nodes_py
    nodes_b = bvh_b.nodes_py
    verts_a = bvh_a.verts_py
    verts_b = bvh_b.verts_py
    tris_a = bvh_a.tris_py
    tris_b = bvh_b.tris_py
    order_a = bvh_a.tri_order_py
    order_b = bvh_b.tri_order_py

    b_box_cache: dict[int, tuple] = {}

    def b_box(node_id: int):
        box = b_box_cache.get(node_id)
        if box is None:
            n = nodes_b[node_id]
            cx, cy, cz = (
                0.5 * (n[0] + n[3]),
                0.5 * (n[1] + n[4]),
                0.5 * (n[2] + n[5]),
            )
            hx, hy, hz = (
                0.5 * (n[3] - n[0]),
                0.5 * (n[4] - n[1]),
                0.5 * (n[5] - n[2]),
            )
            ncx, ncy, ncz = _transform_point(rows, trans, (cx, cy, cz))
            nhx = arows[0][0] * hx + arows[0][1] * hy + arows[0][2] * hz
            nhy = arows[1][0] * hx + arows[1][1] * hy + arows[1][2] * hz
            nhz = arows[2][0] * hx + arows[2][1] * hy + arows[2][2] * hz
            box = (ncx - nhx, ncy - nhy, ncz - nhz, ncx + nhx, ncy + nhy, ncz + nhz)
            b_box_cache[node_id] = box
        return box

    b_vert_cache: list = [None] * len(verts_b)

    def b_vert(i: int):
        p = b_vert_cache[i]
        if p is None:
            p = _transform_point(rows, trans, verts_b[i])
            b_vert_cache[i] = p
        return p

    hits: list[tuple[int, int, tuple]] = []
    stack = [(0, 0)]
    while stack:
        ia, ib = stack.pop()
        na = nodes_a[ia]
        bb = b_box(ib)
        if (
            na[0] > bb[3] or bb[0] > na[3]
            or na[1] > bb[4] or bb[1] > na[4]
            or na[2] > bb[5] or bb[2] > na[5]
        ):
            continue
        nb = nodes_b[ib]
        leaf_a = na[6] < 0
        leaf_b = nb[6] < 0
        if leaf_a and leaf_b:
            for sa in range(na[8], na[8] + na[9]):
                tri_a = order_a[sa]
                ia0, ia1, ia2 = tris_a[tri_a]
                pa0, pa1, pa2 = verts_a[ia0], verts_a[ia1], verts_a[ia2]
                for sb in range(nb[8], nb[8] + nb[9]):
                    tri_b = order_b[sb]
                    ib0, ib1, ib2 = tris_b[tri_b]
                    res = tri_tri_intersect(
                        pa0, pa1, pa2, b_vert(ib0), b_vert(ib1), b_vert(ib2)
                    )
                    if res is not None:
                        hits.append((tri_a, tri_b, res))
            continue
        if leaf_b or (
            not leaf_a
            and (na[3] - na[0]) + (na[4] - na[1]) + (na[5] - na[2])
            >= (bb[3] - bb[0]) + (bb[4] - bb[1]) + (bb[5] - bb[2])
        ):
            stack.append((na[7], ib))
            stack.append((na[6], ib))
        else:
            stack.append((ia, nb[7]))
            stack.append((ia, nb[6]))

    if not hits:
        return None
    hits.sort(key=lambda h: (h[0], h[1]))

    # contact frame: area-weighted average of B's intersecting-triangle
    # normals (they point outward from B, i.e. toward A in the contact zone)
    seen_b: set[int] = set()
    nx = ny = nz = 0.0
    for _, tri_b, _ in hits:
        if tri_b in seen_b:
            continue
        seen_b.add(tri_b)
        i0, i1, i2 = tris_b[tri_b]
        v0, v1, v2 = b_vert(i0), b_vert(i1), b_vert(i2)
        c = _cross(_sub(v1, v0), _sub(v2, v0))  # |c| = 2 * area
        nx += c[0]
        ny += c[1]
        nz += c[2]
    norm = (nx * nx + ny * ny + nz * nz) ** 0.5
    if norm > 1e-12:
        normal = (nx / norm, ny / norm, nz / norm)
    else:
        # opposing faces cancelled: fall back to the centers line, B toward A
        ca = nodes_a[0]
        cb = b_box(0)
        dx = 0.5 * (ca[0] + ca[3]) - 0.5 * (cb[0] + cb[3])
        dy = 0.5 * (ca[1] + ca[4]) - 0.5 * (cb[1] + cb[4])
        dz = 0.5 * (ca[2] + ca[5]) - 0.5 * (cb[2] + cb[5])
        n = (dx * dx + dy * dy + dz * dz) ** 0.5
        normal = (dx / n, dy / n, dz / n) if n > 1e-12 else (0.0, 0.0, 1.0)

    # contact point: mean of intersection-segment midpoints; coplanar pairs
    # contribute the midpoint of the two triangle centroids
    sx = sy = sz = 0.0
    for tri_a, tri_b, res in hits:
        if res[0] == "segment":
            a, b = res[1], res[2]
            sx += 0.5 * (a[0] + b[0])
            sy += 0.5 * (a[1] + b[1])
            sz += 0.5 * (a[2] + b[2])
        else:
            i0, i1, i2 = tris_a[tri_a]
            j0, j1, j2 = tris_b[tri_b]
            a0, a1, a2 = verts_a[i0], verts_a[i1], verts_a[i2]
            b0, b1, b2 = b_vert(j0), b_vert(j1), b_vert(j2)
            sx += ((a0[0] + a1[0] + a2[0]) / 3.0 + (b0[0] + b1[0] + b2[0]) / 3.0) / 2.0
            sy += ((a0[1] + a1[1] + a2[1]) / 3.0 + (b0[1] + b1[1] + b2[1]) / 3.0) / 2.0
            sz += ((a0[2] + a1[2] + a2[2]) / 3.0 + (b0[2] + b1[2] + b2[2]) / 3.0) / 2.0
    k = float(len(hits))
    cp = (sx / k, sy / k, sz / k)

    # penetration: deepest involved A-vertex behind the contact plane
    pen = 0.0
    seen_va: set[int] = set()
    for tri_a, _, _ in hits:
        for vi in tris_a[tri_a]:
            if vi in seen_va:
                continue
            seen_va.add(vi)
            v = verts_a[vi]
            s = (
                (cp[0] - v[0]) * normal[0]
                + (cp[1] - v[1]) * normal[1]
                + (cp[2] - v[2]) * normal[2]
            )
            if s > pen:
                pen = s

    world_normal = quat_rotate(t_a.rotation, Vec3(*normal))
    world_point = apply_transform(t_a, Vec3(*cp))
    return ContactReport(
        pair=pair,
        triangle_pairs=tuple((h[0], h[1]) for h in hits),
        contact_normal=world_normal,
        penetration_estimate=pen,
        contact_point=world_point,
    )


# -- broad phase ---------------------------------------------------------------------

def broad_phase_sweep(entries: list[tuple[int, LocalBox]]) -> list[CandidatePair]:
    """Sweep-and-prune on the x axis: O(n log n + n*c) with the candidate
    pairs as output. Endpoint sort breaks ties start-before-end then by id,
    so touching boxes count as overlapping (closed intervals)."""
    events = []
    boxes: dict[int, LocalBox] = {}
    for obj_id, box in entries:
        boxes[obj_id] = box
        events.append((box.min.x, 0, obj_id))
        events.append((box.max.x, 1, obj_id))
    events.sort()
    active: dict[int, LocalBox] = {}
    out: list[CandidatePair] = []
    for _, kind, obj_id in events:
        if kind == 1:
            active.pop(obj_id, None)
            continue
        box = boxes[obj_id]
        for other_id, other in active.items():
            if (
                box.min.y <= other.max.y and other.min.y <= box.max.y
                and box.min.z <= other.max.z and other.min.z <= box.max.z
            ):
                out.append(canonical_pair(obj_id, other_id))
        active[obj_id] = box
    out.sort()
    return out


# -- pair algebra -----------------------------------------------------------------------

def pose_mode_pairs(moving_ids: Iterable[int], all_ids: Iterable[int]) -> list[CandidatePair]:
    """Every pair with at least one moving member: m(n-m) + m(m-1)/2 pairs."""
    moving = sorted(set(moving_ids))
    moving_set = set(moving)
    others = sorted(set(all_ids) - moving_set)
    out: list[CandidatePair] = []
    for i, m in enumerate(moving):
        for m2 in moving[i + 1:]:
            out.append((m, m2))
        for o in others:
            out.append(canonical_pair(m, o))
    out.sort()
    return out


def crystal_internal_pairs(
    member_ids: list[int],
    transforms: Mapping[int, RigidTransform],
    tol: float = 1e-6,
) -> list[CandidatePair]:
    """One representative pair per offset: members are identical copies laid
    out by one repeated step, so (first, first+k) decides every (i, i+k).

    Verifies the layout actually satisfies the chain law before trusting it.
    """
    n = len(member_ids)
    if n < 2:
        return []
    expected = relative_transform(
        transforms[member_ids[0]], transforms[member_ids[1]]
    )
    for i in range(1, n - 1):
        got = relative_transform(
            transforms[member_ids[i]], transforms[member_ids[i + 1]]
        )
        if not transforms_close(got, expected, tol):
            raise ChainInvariantViolated(
                f"members {member_ids[i]} -> {member_ids[i + 1]} deviate from the chain step"
            )
    return [canonical_pair(member_ids[0], member_ids[k]) for k in range(1, n)]


# -- whole-scene query ---------------------------------------------------------------------

def _collidable_entries(doc: SceneDoc):
    entries = []
    geoms = {}
    for obj_id in sorted(doc.objects):
        obj = doc.objects[obj_id]
        asset = doc.meshes[obj.mesh_ref]
        if asset.bvh is None:
            continue  # nothing to collide against (no triangles)
        entries.append((obj_id, world_aabb(asset.local_box, obj.state.transform)))
        geoms[obj_id] = (asset.bvh, obj.state.transform)
    return entries, geoms


def _expand_moving(doc: SceneDoc, moving_ids: frozenset[int]):
    """Chain members move together, so one grabbed member marks the whole
    chain as moving. Base-pair edits reshape the chain and therefore need the
    internal shortcut tests; dragging a later member keeps the internal
    geometry rigid and needs none."""
    effective = set(m for m in moving_ids if m in doc.objects)
    reshaped: list[int] = []
    same_chain: set[CandidatePair] = set()
    for chain_id in sorted(doc.chains):
        chain = doc.chains[chain_id]
        members = chain.member_ids
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                same_chain.add(canonical_pair(a, b))
        touched = set(members) & effective
        if not touched:
            continue
        effective.update(members)
        if members[0] in touched or members[1] in touched:
            reshaped.append(chain_id)
    return effective, reshaped, same_chain


def collide_scene(
    doc: SceneDoc, mode: str, moving_ids: frozenset[int] = frozenset()
) -> tuple[list[ContactReport], CollisionStats]:
    """Run the full pipeline for one step and instrument what it did."""
    n_objects = len(doc.objects)
    n_moving = len(moving_ids)
    if mode == "off":
        return [], CollisionStats(n_objects, n_moving, 0, 0, 0)
    if mode not in ("full", "pose"):
        raise ValueError(f"unknown collision mode {mode!r}")

    entries, geoms = _collidable_entries(doc)
    broad = broad_phase_sweep(entries)

    if mode == "full":
        tests = broad
        broad_candidates = len(broad)
    else:
        effective, reshaped, same_chain = _expand_moving(doc, moving_ids)
        pose_pairs = set(pose_mode_pairs(effective, geoms.keys()))
        external = [
            p for p in broad if p in pose_pairs and p not in same_chain
        ]
        broad_candidates = len(external)
        internal: list[CandidatePair] = []
        for chain_id in reshaped:
            members = doc.chains[chain_id].member_ids
            usable = [m for m in members if m in geoms]
            if len(usable) == len(members):
                internal.extend(
                    crystal_internal_pairs(
                        members,
                        {m: doc.objects[m].state.transform for m in members},
                    )
                )
        tests = sorted(set(external) | set(internal))

    reports: list[ContactReport] = []
    executed = 0
    for a, b in tests:
        bvh_a, t_a = geoms[a]
        bvh_b, t_b = geoms[b]
        executed += 1
        rep = narrow_phase(bvh_a, t_a, bvh_b, t_b, pair=(a, b))
        if rep is not None:
            reports.append(rep)
    stats = CollisionStats(
        n_objects=n_objects,
        n_moving=n_moving,
        pair_tests_executed=executed,
        pairs_colliding=len(reports),
        broad_candidates=broad_candidates,
    )
    return reports, stats

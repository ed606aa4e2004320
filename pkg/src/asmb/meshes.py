"""Triangle meshes: storage, a small OBJ subset, bounding boxes.

Lengths are nanometers everywhere in the engine. Meshes are immutable once
constructed; their canonical text form (export_obj) is what gets hashed for
content addressing, so its formatting must never change.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EmptyMesh, IndexOutOfRange, MalformedLine
from .transforms import RigidTransform, Vec3, apply_transform


class LocalBox(NamedTuple):
    min: Vec3
    max: Vec3


@dataclass(frozen=True)
class TriMesh:
    """Vertices (N,3) float64 and triangles (M,3) int32, both read-only.

    scalars maps a channel name to one float per vertex (used for colormap
    coloring, e.g. a per-residue backbone coordinate).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    scalars: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int32))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (N, 3)")
        if t.ndim != 2 or (t.size and t.shape[1] != 3):
            raise ValueError("triangles must be (M, 3)")
        if t.size:
            if t.min() < 0 or t.max() >= len(v):
                raise ValueError("triangle index out of range")
            a = v[t[:, 0]]
            cross = np.cross(v[t[:, 1]] - a, v[t[:, 2]] - a)
            areas = 0.5 * np.linalg.norm(cross, axis=1)
            if (areas <= 1e-12).any():
                raise ValueError("degenerate triangle (area <= 1e-12)")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t.reshape(-1, 3))
        for name, chan in self.scalars.items():
            c = np.ascontiguousarray(np.asarray(chan, dtype=np.float64))
            if c.shape != (len(v),):
                raise ValueError(f"scalar channel {name!r} must have one value per vertex")
            c.setflags(write=False)
            self.scalars[name] = c

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)


# -- OBJ subset ----------------------------------------------------------------

def load_obj(text: str) -> TriMesh:
    """Parse the v/f subset of Wavefront OBJ.

    Faces with more than 3 vertices are fan-triangulated from the first
    vertex. vn/vt/comments and other directives are ignored. Face tokens may
    carry /vt/vn suffixes; only the vertex index is used.
    """
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, list[int]]] = []  # (line_no, 1-based indices)
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0]
        if key == "v":
            if len(parts) < 4:
                raise MalformedLine(line_no, "vertex needs 3 coordinates")
            try:
                vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError:
                raise MalformedLine(line_no, "vertex coordinate is not a number") from None
        elif key == "f":
            if len(parts) < 4:
                raise MalformedLine(line_no, "face needs at least 3 vertices")
            idx = []
            for token in parts[1:]:
                head = token.split("/", 1)[0]
                try:
                    idx.append(int(head))
                except ValueError:
                    raise MalformedLine(line_no, f"bad face index {token!r}") from None
            faces.append((line_no, idx))
        # vn, vt, o, g, s, usemtl, mtllib and anything else: skipped
    triangles: list[tuple[int, int, int]] = []
    n = len(vertices)
    for line_no, idx in faces:
        for i in idx:
            if i < 1 or i > n:
                raise IndexOutOfRange(line_no, f"vertex index {i} of {n}")
        for k in range(1, len(idx) - 1):
            triangles.append((idx[0] - 1, idx[k] - 1, idx[k + 1] - 1))
    return TriMesh(
        np.array(vertices, dtype=np.float64).reshape(-1, 3),
        np.array(triangles, dtype=np.int32).reshape(-1, 3),
    )


def export_obj(mesh: TriMesh) -> str:
    """Canonical text form: v lines then f lines, 1-based, repr floats."""
    out = []
    for x, y, z in mesh.vertices:
        out.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for a, b, c in mesh.triangles:
        out.append(f"f {a + 1} {b + 1} {c + 1}")
    return "\n".join(out) + "\n"


def mesh_content_hash(mesh: TriMesh) -> str:
    return hashlib.sha256(export_obj(mesh).encode("utf-8")).hexdigest()


# -- boxes -----------------------------------------------------------------------

def fit_local_box(mesh: TriMesh) -> LocalBox:
    if len(mesh.vertices) == 0:
        raise EmptyMesh("cannot fit a box to a mesh with no vertices")
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    return LocalBox(Vec3(*map(float, lo)), Vec3(*map(float, hi)))


def box_corners(box: LocalBox) -> list[Vec3]:
    (x0, y0, z0), (x1, y1, z1) = box
    return [
        Vec3(x, y, z)
        for x in (x0, x1)
        for y in (y0, y1)
        for z in (z0, z1)
    ]


def box_center(box: LocalBox) -> Vec3:
    return Vec3(
        0.5 * (box.min.x + box.max.x),
        0.5 * (box.min.y + box.max.y),
        0.5 * (box.min.z + box.max.z),
    )


def world_aabb(box: LocalBox, t: RigidTransform) -> LocalBox:
    """Axis-aligned box around the rigidly transformed corners."""
    pts = [apply_transform(t, c) for c in box_corners(box)]
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    zs = [p.z for p in pts]
    return LocalBox(
        Vec3(min(xs), min(ys), min(zs)),
        Vec3(max(xs), max(ys), max(zs)),
    )


def boxes_overlap(a: LocalBox, b: LocalBox) -> bool:
    """Closed-interval overlap on all three axes (touching counts)."""
    return (
        a.min.x <= b.max.x and b.min.x <= a.max.x
        and a.min.y <= b.max.y and b.min.y <= a.max.y
        and a.min.z <= b.max.z and b.min.z <= a.max.z
    )

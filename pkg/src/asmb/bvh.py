"""Bounding volume hierarchy over mesh triangles.

Deterministic construction: median split on the longest axis of the centroid
bounds, ties broken by lower triangle index, so the same mesh always yields
the same tree on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMesh
from .meshes import TriMesh

# node tuple layout used by the traversal fast path:
# (min_x, min_y, min_z, max_x, max_y, max_z, left, right, start, count)
# left == -1 marks a leaf owning tri_order[start:start+count]


@dataclass
class BvhTree:
    mesh: TriMesh
    leaf_size: int
    bounds_min: np.ndarray  # (K,3)
    bounds_max: np.ndarray  # (K,3)
    children: np.ndarray    # (K,2) int32, -1 -1 for leaves
    ranges: np.ndarray      # (K,2) int32 (start, count), valid for leaves
    tri_order: np.ndarray   # (M,) int32 permutation of triangle indices
    # plain-python mirrors: traversal is much faster on tuples than on
    # numpy scalar indexing
    nodes_py: list = field(repr=False, default_factory=list)
    tri_order_py: list = field(repr=False, default_factory=list)
    verts_py: list = field(repr=False, default_factory=list)
    tris_py: list = field(repr=False, default_factory=list)

    @property
    def node_count(self) -> int:
        return len(self.children)

    def depth(self) -> int:
        depths = [0] * self.node_count
        out = 1
        for i in range(self.node_count):
            left, right = self.children[i]
            d = depths[i]
            if left >= 0:
                depths[left] = d + 1
                depths[right] = d + 1
                out = max(out, d + 2)
        return out


def build_bvh(mesh: TriMesh, leaf_size: int = 4) -> BvhTree:
    if mesh.triangle_count == 0:
        raise EmptyMesh("cannot build a hierarchy over zero triangles")
    if leaf_size < 1:
        raise ValueError("leaf_size must be >= 1")
    v = mesh.vertices
    t = mesh.triangles
    corners = v[t]                      # (M,3,3)
    tri_min = corners.min(axis=1)       # (M,3)
    tri_max = corners.max(axis=1)
    centroids = corners.mean(axis=1)

    bounds_min: list[np.ndarray] = []
    bounds_max: list[np.ndarray] = []
    children: list[tuple[int, int]] = []
    ranges: list[tuple[int, int]] = []
    tri_order: list[int] = []

    def build(idx: np.ndarray) -> int:
        node_id = len(children)
        bounds_min.append(tri_min[idx].min(axis=0))
        bounds_max.append(tri_max[idx].max(axis=0))
        children.append((-1, -1))
        ranges.append((0, 0))
        if len(idx) <= leaf_size:
            ranges[node_id] = (len(tri_order), len(idx))
            tri_order.extend(int(i) for i in idx)
            return node_id
        c = centroids[idx]
        extent = c.max(axis=0) - c.min(axis=0)
        axis = int(np.argmax(extent))   # equal extents pick x before y before z
        idx = idx[np.lexsort((idx, c[:, axis]))]
        mid = len(idx) // 2
        left = build(idx[:mid])
        right = build(idx[mid:])
        children[node_id] = (left, right)
        return node_id

    build(np.arange(mesh.triangle_count, dtype=np.int64))

    bmin = np.array(bounds_min)
    bmax = np.array(bounds_max)
    ch = np.array(children, dtype=np.int32)
    rg = np.array(ranges, dtype=np.int32)
    order = np.array(tri_order, dtype=np.int32)

    nodes_py = [
        (
            float(bmin[i][0]), float(bmin[i][1]), float(bmin[i][2]),
            float(bmax[i][0]), float(bmax[i][1]), float(bmax[i][2]),
            int(ch[i][0]), int(ch[i][1]), int(rg[i][0]), int(rg[i][1]),
        )
        for i in range(len(ch))
    ]
    return BvhTree(
        mesh=mesh,
        leaf_size=leaf_size,
        bounds_min=bmin,
        bounds_max=bmax,
        children=ch,
        ranges=rg,
        tri_order=order,
        nodes_py=nodes_py,
        tri_order_py=[int(i) for i in order],
        verts_py=[tuple(map(float, p)) for p in v],
        tris_py=[tuple(map(int, tri)) for tri in t],
    )

"""Mesh builders shared by the collision, physics and scene tests."""

import numpy as np

from asmb.meshes import TriMesh, load_obj

# unit cube [0,1]^3, outward winding
CUBE_OBJ = """v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3
f 1 3 2
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
"""

# 12 triangle indices of an axis-aligned box with the vertex order below
_BOX_FACES = [
    (1, 4, 3), (1, 3, 2),
    (5, 6, 7), (5, 7, 8),
    (1, 2, 6), (1, 6, 5),
    (2, 3, 7), (2, 7, 6),
    (3, 4, 8), (3, 8, 7),
    (4, 1, 5), (4, 5, 8),
]


def box_obj(lo, hi):
    """OBJ text for an axis-aligned box between two corners."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    verts = [
        (x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
        (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1),
    ]
    lines = [f"v {vx} {vy} {vz}" for vx, vy, vz in verts]
    lines += [f"f {a} {b} {c}" for a, b, c in _BOX_FACES]
    return "\n".join(lines) + "\n"


def box_mesh(lo, hi) -> TriMesh:
    return load_obj(box_obj(lo, hi))


def cube_mesh() -> TriMesh:
    return load_obj(CUBE_OBJ)


def lat_long_sphere(rows: int, cols: int, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Latitude/longitude sphere triangulation, poles as fans."""
    import math

    cx, cy, cz = center
    verts = [(cx, cy + radius, cz)]
    for i in range(1, rows):
        phi = math.pi * i / rows
        for j in range(cols):
            theta = 2.0 * math.pi * j / cols
            verts.append((
                cx + radius * math.sin(phi) * math.cos(theta),
                cy + radius * math.cos(phi),
                cz + radius * math.sin(phi) * math.sin(theta),
            ))
    verts.append((cx, cy - radius, cz))
    last = len(verts) - 1
    tris = []
    for j in range(cols):
        tris.append((0, 1 + (j + 1) % cols, 1 + j))
    for i in range(rows - 2):
        a = 1 + i * cols
        b = 1 + (i + 1) * cols
        for j in range(cols):
            j2 = (j + 1) % cols
            tris.append((a + j, a + j2, b + j))
            tris.append((a + j2, b + j2, b + j))
    base = 1 + (rows - 2) * cols
    for j in range(cols):
        tris.append((base + j, base + (j + 1) % cols, last))
    return TriMesh(np.array(verts), np.array(tris, dtype=np.int32))


def atom_line(serial, name, res_name, chain, res_seq, x, y, z, element=""):
    """One fixed-column ATOM record (coordinates in angstroms)."""
    return (
        f"ATOM  {serial:5d} {name:<4s} {res_name:<3s} {chain}{res_seq:4d}    "
        f"{x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00          {element:>2s}"
    )


def two_residue_pdb() -> str:
    return "\n".join([
        "HEADER    TEST MOLECULE                           01-JAN-00   1ABC",
        atom_line(1, "N", "ALA", "A", 1, 10.0, 5.0, -4.0, "N"),
        atom_line(2, "CA", "ALA", "A", 1, 11.639, 6.071, -5.147, "C"),
        atom_line(3, "C", "ALA", "A", 1, 12.5, 5.5, -6.0, "C"),
        atom_line(4, "N", "GLY", "A", 2, 9.0, 7.0, -2.0, "N"),
        atom_line(5, "CA", "GLY", "A", 2, 8.810, 6.557, -2.645, "C"),
        "END",
    ]) + "\n"


def sliver_obj(eps: float = 1e-5) -> str:
    """One nearly flat triangle along the main diagonal. Copies offset along
    (1, -1, 0) stay parallel and never intersect while their world boxes all
    keep overlapping, which pins down pair-count accounting exactly."""
    return (
        "v 0 0 0\n"
        "v 1 1 1\n"
        f"v 0.5 0.5 {0.5 + eps}\n"
        "f 1 2 3\n"
    )

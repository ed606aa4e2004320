"""Minimal PDB reader: one sphere per atom, fixed-column parsing only.

This is a stand-in for a real molecular surface import. Coordinates arrive in
angstroms and are converted to nanometers (divide by 10). Sphere radii come
from a small van der Waals table keyed by element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoAtoms, UnparseableRecord
from .meshes import TriMesh
from .transforms import Vec3

# van der Waals radii in angstroms; anything unknown gets the default
VDW_RADII_A = {"C": 1.70, "N": 1.55, "O": 1.52, "S": 1.80, "H": 1.20, "P": 1.80}
DEFAULT_RADIUS_A = 1.60


@dataclass(frozen=True)
class MoleculeMeta:
    """Anchor points carried alongside a molecule mesh, in mesh-local nm."""

    n_terminus: Vec3
    c_terminus: Vec3
    source_id: str = ""


def _icosahedron() -> tuple[list[tuple[float, float, float]], list[tuple[int, int, int]]]:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    inv = 1.0 / math.sqrt(1.0 + phi * phi)
    verts = [(x * inv, y * inv, z * inv) for x, y, z in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return verts, faces


def icosphere(subdiv: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Unit sphere: 12 verts / 20 tris at subdiv 0, 42 / 80 at subdiv 1."""
    if subdiv not in (0, 1):
        raise ValueError("subdiv must be 0 or 1")
    verts, faces = _icosahedron()
    for _ in range(subdiv):
        edge_mid: dict[tuple[int, int], int] = {}
        new_faces = []

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key in edge_mid:
                return edge_mid[key]
            va, vb = verts[a], verts[b]
            m = (va[0] + vb[0], va[1] + vb[1], va[2] + vb[2])
            n = math.sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2])
            verts.append((m[0] / n, m[1] / n, m[2] / n))
            edge_mid[key] = len(verts) - 1
            return edge_mid[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int32)


def _element_of(line: str) -> str:
    elem = line[76:78].strip() if len(line) >= 78 else ""
    if elem:
        return elem.upper()
    # fall back to the first letter of the atom name field
    for ch in line[12:16]:
        if ch.isalpha():
            return ch.upper()
    return ""


def load_pdb_spheres(
    text: str, radius_scale: float = 1.0, subdiv: int = 0
) -> tuple[TriMesh, MoleculeMeta]:
    """Build one mesh with an icosphere per ATOM/HETATM record.

    Termini metadata: alpha-carbon positions of the first and last residue of
    the first chain (falling back to the residue's first atom when no CA is
    present). The "backbone" scalar channel ramps 0..1 along residue order,
    for colormap coloring.
    """
    atoms = []  # (center_nm, radius_nm, residue_key)
    residue_order: list[tuple[str, str]] = []
    residue_atoms: dict[tuple[str, str], list[tuple[str, Vec3]]] = {}
    first_chain: str | None = None
    source_id = ""
    for line_no, line in enumerate(text.splitlines(), start=1):
        record = line[0:6].strip()
        if record == "HEADER":
            source_id = line[62:66].strip()
            continue
        if record not in ("ATOM", "HETATM"):
            continue
        if len(line) < 54:
            raise UnparseableRecord(line_no, "record too short for coordinates")
        try:
            x = float(line[30:38])
            y = float(line[38:46])
            z = float(line[46:54])
        except ValueError:
            raise UnparseableRecord(line_no, "bad coordinate field") from None
        center = Vec3(x / 10.0, y / 10.0, z / 10.0)
        elem = _element_of(line)
        radius = VDW_RADII_A.get(elem, DEFAULT_RADIUS_A) * radius_scale / 10.0
        chain = line[21] if len(line) > 21 else " "
        res_key = (chain, line[22:27].strip() if len(line) >= 27 else "")
        atoms.append((center, radius, res_key))
        if record == "ATOM":
            if first_chain is None:
                first_chain = chain
            if res_key not in residue_atoms:
                residue_atoms[res_key] = []
                residue_order.append(res_key)
            residue_atoms[res_key].append((line[12:16].strip(), center))
    if not atoms:
        raise NoAtoms("no ATOM or HETATM records found")

    sphere_v, sphere_t = icosphere(subdiv)
    nv = len(sphere_v)
    all_res = [k for k in residue_order]
    res_ordinal = {k: i for i, k in enumerate(all_res)}
    denom = max(1, len(all_res) - 1)

    verts = np.empty((nv * len(atoms), 3), dtype=np.float64)
    tris = np.empty((len(sphere_t) * len(atoms), 3), dtype=np.int32)
    backbone = np.zeros(nv * len(atoms), dtype=np.float64)
    for i, (center, radius, res_key) in enumerate(atoms):
        verts[i * nv:(i + 1) * nv] = sphere_v * radius + np.array(center)
        tris[i * len(sphere_t):(i + 1) * len(sphere_t)] = sphere_t + i * nv
        frac = res_ordinal.get(res_key, 0) / denom
        backbone[i * nv:(i + 1) * nv] = frac

    def _ca_or_first(res_key) -> Vec3:
        entries = residue_atoms[res_key]
        for name, pos in entries:
            if name == "CA":
                return pos
        return entries[0][1]

    chain_residues = [k for k in residue_order if k[0] == first_chain]
    if chain_residues:
        n_term = _ca_or_first(chain_residues[0])
        c_term = _ca_or_first(chain_residues[-1])
    else:
        # HETATM-only input: fall back to first and last atom centers
        n_term = atoms[0][0]
        c_term = atoms[-1][0]
    meta = MoleculeMeta(n_terminus=n_term, c_terminus=c_term, source_id=source_id)
    return TriMesh(verts, tris, {"backbone": backbone}), meta

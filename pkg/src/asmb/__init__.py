"""asmb: deterministic rigid-body scene assembly for macromolecular modeling.

Library layers, lowest first: transforms, meshes/pdb/bvh, collision, physics,
scene, project_io, session, cli.
"""

__version__ = "0.1.0"

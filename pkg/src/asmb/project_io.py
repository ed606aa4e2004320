"""Project files, clipboard fragments and the sampled-animation interchange.

All three formats are canonical JSON: UTF-8, keys sorted, two-space indent,
shortest round-trip decimal floats (Python repr), one trailing newline. The
same document therefore always serializes to the same bytes, which makes
save(load(save(doc))) byte-identical and lets tests compare scenes by their
serialized form.

Grabs and the selection list are live interaction state, not document state;
they are never written and load as empty.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .config import PhysicsConfig, config_from_mapping
from .errors import (
    DanglingReference,
    EngineError,
    RangeError,
    SchemaViolation,
    VersionMismatch,
)
from .meshes import TriMesh, export_obj, load_obj, mesh_content_hash
from .pdb import MoleculeMeta
from .physics import BodyState, SpringConnector
from .scene import (
    COLORMAPS,
    INTERACTION_MODES,
    PHYSICS_MODES,
    ChannelColor,
    Color,
    CrystalChain,
    Group,
    Keyframe,
    SceneDoc,
    SceneObject,
    SolidColor,
)
from .transforms import (
    RigidTransform,
    Vec3,
    quat_canonical,
    transform_from_json,
    transform_to_json,
)

FORMAT_VERSION = 1
PROJECT_EXTENSION = ".asmb"
ANIMATION_EXTENSION = ".anim"

# direction the interchange header suggests for a key light; consumers are
# free to interpret or ignore it
LIGHT_DIRECTION = (0.0, -1.0, 0.0)


def canonical_json_bytes(data) -> bytes:
    try:
        text = json.dumps(
            data, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False
        )
    except (TypeError, ValueError) as exc:
        raise SchemaViolation("(document)", f"not serializable: {exc}") from None
    return (text + "\n").encode("utf-8")


# -- JSON writers ---------------------------------------------------------------


def _vec_json(v: Vec3) -> list[float]:
    return [float(v[0]), float(v[1]), float(v[2])]


def _color_json(color: Color) -> dict:
    if isinstance(color, SolidColor):
        return {"rgb": [float(color.r), float(color.g), float(color.b)]}
    return {"channel": color.channel, "colormap": color.colormap}


def _keyframe_json(kf: Keyframe) -> dict:
    return {
        "time": float(kf.time),
        "transform": transform_to_json(kf.transform),
        "color": _color_json(kf.color),
        "group": kf.group_id,
        "visible": kf.visible,
    }


def _state_json(state: BodyState) -> dict:
    return {
        "transform": transform_to_json(state.transform),
        "linear_velocity": _vec_json(state.linear_velocity),
        "angular_velocity": _vec_json(state.angular_velocity),
        "mass": float(state.mass),
        "inertia": _vec_json(state.inertia),
        "center_local": _vec_json(state.center_local),
    }


def _object_json(obj: SceneObject) -> dict:
    return {
        "id": obj.id,
        "name": obj.name,
        "mesh": obj.mesh_ref,
        "state": _state_json(obj.state),
        "color": _color_json(obj.color),
        "group": obj.group_id,
        "visible": obj.visible,
        "chain": obj.chain_id,
        "chain_index": obj.chain_index,
        "keyframes": [_keyframe_json(kf) for kf in obj.keyframes],
    }


def _mesh_entry_json(doc: SceneDoc, ref: str) -> dict:
    asset = doc.meshes[ref]
    entry: dict = {}
    if asset.external_path is not None:
        entry["path"] = asset.external_path
    else:
        entry["obj"] = export_obj(asset.mesh)
    if asset.mesh.scalars:
        entry["scalars"] = {
            name: [float(x) for x in values]
            for name, values in asset.mesh.scalars.items()
        }
    if asset.meta is not None:
        entry["meta"] = {
            "n_terminus": _vec_json(asset.meta.n_terminus),
            "c_terminus": _vec_json(asset.meta.c_terminus),
            "source_id": asset.meta.source_id,
        }
    if asset.name:
        entry["name"] = asset.name
    return entry


def save(doc: SceneDoc) -> bytes:
    data = {
        "format_version": FORMAT_VERSION,
        "kind": "project",
        "physics": doc.physics.to_json(),
        "duration": float(doc.duration),
        "current_time": float(doc.current_time),
        "physics_mode": doc.physics_mode,
        "interaction_mode": doc.interaction_mode,
        "collisions_enabled": doc.collisions_enabled,
        "springs_enabled": doc.springs_enabled,
        "next_id": doc.next_id,
        "meshes": {ref: _mesh_entry_json(doc, ref) for ref in sorted(doc.meshes)},
        "objects": [_object_json(doc.objects[i]) for i in sorted(doc.objects)],
        "groups": [
            {"id": g.id, "name": g.name}
            for g in (doc.groups[i] for i in sorted(doc.groups))
        ],
        "chains": [
            {
                "id": c.id,
                "members": list(c.member_ids),
                "t_ab": transform_to_json(c.t_ab),
            }
            for c in (doc.chains[i] for i in sorted(doc.chains))
        ],
        "connectors": [
            {
                "id": c.id,
                "object_a": c.object_a,
                "anchor_a": _vec_json(c.anchor_a),
                "object_b": c.object_b,
                "anchor_b": _vec_json(c.anchor_b),
                "rest_length": float(c.rest_length),
                "stiffness": float(c.stiffness),
                "display_only": c.display_only,
            }
            for c in (doc.connectors[i] for i in sorted(doc.connectors))
        ],
    }
    return canonical_json_bytes(data)


def save_file(doc: SceneDoc, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(save(doc))


# -- JSON readers -----------------------------------------------------------------
# Every reader carries the path of the value it is inspecting so a schema
# error names the offending location ("objects/2/state/mass").


def _parse_json(data):
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaViolation("(document)", f"not UTF-8: {exc}") from None
    def _no_constants(token):
        raise SchemaViolation("(document)", f"non-finite number {token!r}")
    try:
        return json.loads(data, parse_constant=_no_constants)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("(document)", f"not valid JSON: {exc}") from None


def _dict(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(path, "expected an object")
    return value


def _list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaViolation(path, "expected an array")
    return value


def _req(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise SchemaViolation(f"{path}/{key}" if path else key, "missing required field")
    return mapping[key]


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(path, "expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaViolation(path, "expected a finite number")
    return value


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(path, "expected an integer")
    return value


def _opt_int(value, path: str) -> int | None:
    return None if value is None else _int(value, path)


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaViolation(path, "expected true or false")
    return value


def _str(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaViolation(path, "expected a string")
    return value


def _enum(value, allowed, path: str) -> str:
    value = _str(value, path)
    if value not in allowed:
        raise SchemaViolation(path, f"must be one of {', '.join(allowed)}")
    return value


def _read_vec(value, path: str) -> Vec3:
    items = _list(value, path)
    if len(items) != 3:
        raise SchemaViolation(path, "expected 3 numbers")
    return Vec3(*(_num(x, f"{path}/{i}") for i, x in enumerate(items)))


def _read_transform(value, path: str) -> RigidTransform:
    data = _dict(value, path)
    rot = _list(_req(data, "rotation", path), f"{path}/rotation")
    tr = _list(_req(data, "translation", path), f"{path}/translation")
    if len(rot) != 4 or len(tr) != 3:
        raise SchemaViolation(path, "rotation needs 4 numbers, translation 3")
    for i, x in enumerate(rot):
        _num(x, f"{path}/rotation/{i}")
    for i, x in enumerate(tr):
        _num(x, f"{path}/translation/{i}")
    try:
        return transform_from_json(data)
    except ValueError as exc:
        raise SchemaViolation(path, str(exc)) from None


def _read_color(value, path: str) -> Color:
    data = _dict(value, path)
    if "rgb" in data:
        rgb = _list(data["rgb"], f"{path}/rgb")
        if len(rgb) != 3:
            raise SchemaViolation(f"{path}/rgb", "expected 3 numbers")
        return SolidColor(*(_num(x, f"{path}/rgb/{i}") for i, x in enumerate(rgb)))
    if "channel" in data:
        return ChannelColor(
            _str(data["channel"], f"{path}/channel"),
            _enum(_req(data, "colormap", path), COLORMAPS, f"{path}/colormap"),
        )
    raise SchemaViolation(path, "color needs either rgb or channel")


def _read_keyframe(value, path: str) -> Keyframe:
    data = _dict(value, path)
    time = _num(_req(data, "time", path), f"{path}/time")
    if time < 0.0:
        raise SchemaViolation(f"{path}/time", "keyframe time must be >= 0")
    return Keyframe(
        time=time,
        transform=_read_transform(_req(data, "transform", path), f"{path}/transform"),
        color=_read_color(_req(data, "color", path), f"{path}/color"),
        group_id=_opt_int(_req(data, "group", path), f"{path}/group"),
        visible=_bool(_req(data, "visible", path), f"{path}/visible"),
    )


def _read_state(value, path: str) -> BodyState:
    data = _dict(value, path)
    mass = _num(_req(data, "mass", path), f"{path}/mass")
    if mass <= 0.0:
        raise SchemaViolation(f"{path}/mass", "mass must be positive")
    inertia = _read_vec(_req(data, "inertia", path), f"{path}/inertia")
    if min(inertia) <= 0.0:
        raise SchemaViolation(f"{path}/inertia", "inertia terms must be positive")
    return BodyState(
        transform=_read_transform(_req(data, "transform", path), f"{path}/transform"),
        linear_velocity=_read_vec(
            _req(data, "linear_velocity", path), f"{path}/linear_velocity"
        ),
        angular_velocity=_read_vec(
            _req(data, "angular_velocity", path), f"{path}/angular_velocity"
        ),
        mass=mass,
        inertia=inertia,
        center_local=_read_vec(
            _req(data, "center_local", path), f"{path}/center_local"
        ),
    )


def _read_object(value, path: str) -> SceneObject:
    data = _dict(value, path)
    keyframes = [
        _read_keyframe(kf, f"{path}/keyframes/{i}")
        for i, kf in enumerate(_list(_req(data, "keyframes", path), f"{path}/keyframes"))
    ]
    for prev, cur in zip(keyframes, keyframes[1:]):
        if cur.time <= prev.time:
            raise SchemaViolation(
                f"{path}/keyframes", "keyframe times must be strictly increasing"
            )
    return SceneObject(
        id=_int(_req(data, "id", path), f"{path}/id"),
        name=_str(_req(data, "name", path), f"{path}/name"),
        mesh_ref=_str(_req(data, "mesh", path), f"{path}/mesh"),
        state=_read_state(_req(data, "state", path), f"{path}/state"),
        color=_read_color(_req(data, "color", path), f"{path}/color"),
        group_id=_opt_int(_req(data, "group", path), f"{path}/group"),
        visible=_bool(_req(data, "visible", path), f"{path}/visible"),
        chain_id=_opt_int(_req(data, "chain", path), f"{path}/chain"),
        chain_index=_opt_int(_req(data, "chain_index", path), f"{path}/chain_index"),
        keyframes=keyframes,
    )


def _read_mesh_entry(ref: str, value, path: str, base_dir: str | None):
    """Returns (mesh, meta, name, external_path); verifies the content hash."""
    data = _dict(value, path)
    external_path = None
    if "obj" in data and "path" in data:
        raise SchemaViolation(path, "mesh has both obj and path")
    if "obj" in data:
        text = _str(data["obj"], f"{path}/obj")
    elif "path" in data:
        external_path = _str(data["path"], f"{path}/path")
        resolved = external_path
        if base_dir is not None and not os.path.isabs(resolved):
            resolved = os.path.join(base_dir, resolved)
        try:
            with open(resolved, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise SchemaViolation(f"{path}/path", f"cannot read mesh file: {exc}") from None
    else:
        raise SchemaViolation(path, "mesh needs either obj text or path")
    try:
        parsed = load_obj(text)
    except EngineError as exc:
        raise SchemaViolation(f"{path}/obj", f"bad OBJ text: {exc}") from None
    scalars = {}
    for name, values in sorted(_dict(data.get("scalars", {}), f"{path}/scalars").items()):
        spath = f"{path}/scalars/{name}"
        items = _list(values, spath)
        scalars[name] = np.array(
            [_num(x, f"{spath}/{i}") for i, x in enumerate(items)], dtype=np.float64
        )
    try:
        mesh = TriMesh(parsed.vertices, parsed.triangles, scalars)
    except ValueError as exc:
        raise SchemaViolation(path, str(exc)) from None
    if mesh_content_hash(mesh) != ref:
        raise SchemaViolation(path, "mesh content does not match its hash key")
    meta = None
    if "meta" in data:
        mdata = _dict(data["meta"], f"{path}/meta")
        meta = MoleculeMeta(
            n_terminus=_read_vec(_req(mdata, "n_terminus", f"{path}/meta"), f"{path}/meta/n_terminus"),
            c_terminus=_read_vec(_req(mdata, "c_terminus", f"{path}/meta"), f"{path}/meta/c_terminus"),
            source_id=_str(mdata.get("source_id", ""), f"{path}/meta/source_id"),
        )
    name = _str(data.get("name", ""), f"{path}/name")
    return mesh, meta, name, external_path


def _read_entities(data: dict, base_dir: str | None):
    """Read and cross-validate the mesh table and the four entity arrays.

    Shared by project load and clipboard paste: references must resolve
    within the data itself, ids must be unique across entity kinds, and the
    chain rows must agree with the chain fields stored on the objects.
    """
    meshes = {}
    for ref in sorted(_dict(_req(data, "meshes", ""), "meshes")):
        meshes[ref] = _read_mesh_entry(
            ref, data["meshes"][ref], f"meshes/{ref}", base_dir
        )

    objects: dict[int, SceneObject] = {}
    order: list[int] = []
    for i, row in enumerate(_list(_req(data, "objects", ""), "objects")):
        obj = _read_object(row, f"objects/{i}")
        if obj.id in objects:
            raise SchemaViolation(f"objects/{i}/id", f"duplicate id {obj.id}")
        if obj.mesh_ref not in meshes:
            raise DanglingReference(
                f"objects/{i}: mesh {obj.mesh_ref} is not in the mesh table"
            )
        objects[obj.id] = obj
        order.append(obj.id)

    groups: dict[int, Group] = {}
    for i, row in enumerate(_list(_req(data, "groups", ""), "groups")):
        gdata = _dict(row, f"groups/{i}")
        grp = Group(
            id=_int(_req(gdata, "id", f"groups/{i}"), f"groups/{i}/id"),
            name=_str(gdata.get("name", ""), f"groups/{i}/name"),
        )
        if grp.id in groups:
            raise SchemaViolation(f"groups/{i}/id", f"duplicate id {grp.id}")
        groups[grp.id] = grp

    chains: dict[int, CrystalChain] = {}
    for i, row in enumerate(_list(_req(data, "chains", ""), "chains")):
        cdata = _dict(row, f"chains/{i}")
        members = [
            _int(m, f"chains/{i}/members/{j}")
            for j, m in enumerate(_list(_req(cdata, "members", f"chains/{i}"), f"chains/{i}/members"))
        ]
        chain = CrystalChain(
            id=_int(_req(cdata, "id", f"chains/{i}"), f"chains/{i}/id"),
            member_ids=members,
            t_ab=_read_transform(_req(cdata, "t_ab", f"chains/{i}"), f"chains/{i}/t_ab"),
        )
        if chain.id in chains:
            raise SchemaViolation(f"chains/{i}/id", f"duplicate id {chain.id}")
        if len(members) < 2:
            raise SchemaViolation(f"chains/{i}/members", "a chain needs at least 2 members")
        if len(set(members)) != len(members):
            raise SchemaViolation(f"chains/{i}/members", "repeated member id")
        chains[chain.id] = chain

    connectors: dict[int, SpringConnector] = {}
    for i, row in enumerate(_list(_req(data, "connectors", ""), "connectors")):
        cpath = f"connectors/{i}"
        cdata = _dict(row, cpath)
        rest = _num(_req(cdata, "rest_length", cpath), f"{cpath}/rest_length")
        stiffness = _num(_req(cdata, "stiffness", cpath), f"{cpath}/stiffness")
        if rest < 0.0 or stiffness < 0.0:
            raise SchemaViolation(cpath, "rest_length and stiffness must be >= 0")
        conn = SpringConnector(
            id=_int(_req(cdata, "id", cpath), f"{cpath}/id"),
            object_a=_int(_req(cdata, "object_a", cpath), f"{cpath}/object_a"),
            anchor_a=_read_vec(_req(cdata, "anchor_a", cpath), f"{cpath}/anchor_a"),
            object_b=_int(_req(cdata, "object_b", cpath), f"{cpath}/object_b"),
            anchor_b=_read_vec(_req(cdata, "anchor_b", cpath), f"{cpath}/anchor_b"),
            rest_length=rest,
            stiffness=stiffness,
            display_only=_bool(_req(cdata, "display_only", cpath), f"{cpath}/display_only"),
        )
        if conn.id in connectors:
            raise SchemaViolation(f"{cpath}/id", f"duplicate id {conn.id}")
        connectors[conn.id] = conn

    all_ids = (
        list(objects) + list(groups) + list(chains) + list(connectors)
    )
    if len(set(all_ids)) != len(all_ids):
        raise SchemaViolation("(ids)", "entity ids must be unique across kinds")

    # cross-references
    for obj in objects.values():
        if obj.group_id is not None and obj.group_id not in groups:
            raise DanglingReference(f"object {obj.id}: group {obj.group_id} not found")
        for kf in obj.keyframes:
            if kf.group_id is not None and kf.group_id not in groups:
                raise DanglingReference(
                    f"object {obj.id}: keyframe group {kf.group_id} not found"
                )
        if (obj.chain_id is None) != (obj.chain_index is None):
            raise SchemaViolation(
                f"objects: object {obj.id}", "chain and chain_index must be set together"
            )
        if obj.chain_id is not None and obj.chain_id not in chains:
            raise DanglingReference(f"object {obj.id}: chain {obj.chain_id} not found")
    chained = set()
    for chain in chains.values():
        for idx, member in enumerate(chain.member_ids):
            if member not in objects:
                raise DanglingReference(f"chain {chain.id}: member {member} not found")
            obj = objects[member]
            if obj.chain_id != chain.id or obj.chain_index != idx:
                raise SchemaViolation(
                    f"chains: chain {chain.id}",
                    f"member {member} does not carry matching chain fields",
                )
            chained.add(member)
    for obj in objects.values():
        if obj.chain_id is not None and obj.id not in chained:
            raise DanglingReference(
                f"object {obj.id}: chain {obj.chain_id} does not list it"
            )
    for conn in connectors.values():
        for endpoint in (conn.object_a, conn.object_b):
            if endpoint not in objects:
                raise DanglingReference(
                    f"connector {conn.id}: object {endpoint} not found"
                )

    return meshes, objects, order, groups, chains, connectors


def _check_version(data: dict, expected_kind: str) -> dict:
    data = _dict(data, "(document)")
    version = _req(data, "format_version", "")
    if not isinstance(version, int) or version != FORMAT_VERSION:
        raise VersionMismatch(
            f"format_version {version!r} is not supported (this build reads {FORMAT_VERSION})"
        )
    kind = _str(_req(data, "kind", ""), "kind")
    if kind != expected_kind:
        raise SchemaViolation("kind", f"expected {expected_kind!r}, found {kind!r}")
    return data


def load(data, base_dir: str | None = None) -> SceneDoc:
    root = _check_version(_parse_json(data), "project")

    physics = config_from_mapping(_dict(_req(root, "physics", ""), "physics"))
    duration = _num(_req(root, "duration", ""), "duration")
    if duration <= 0.0:
        raise SchemaViolation("duration", "duration must be positive")
    current_time = _num(_req(root, "current_time", ""), "current_time")
    if not 0.0 <= current_time <= duration:
        raise SchemaViolation("current_time", "must lie within [0, duration]")

    doc = SceneDoc(
        physics=physics,
        duration=duration,
        current_time=current_time,
        physics_mode=_enum(_req(root, "physics_mode", ""), PHYSICS_MODES, "physics_mode"),
        interaction_mode=_enum(
            _req(root, "interaction_mode", ""), INTERACTION_MODES, "interaction_mode"
        ),
        collisions_enabled=_bool(_req(root, "collisions_enabled", ""), "collisions_enabled"),
        springs_enabled=_bool(_req(root, "springs_enabled", ""), "springs_enabled"),
    )

    meshes, objects, order, groups, chains, connectors = _read_entities(root, base_dir)
    for ref, (mesh, meta, name, external_path) in meshes.items():
        doc.register_mesh(mesh, meta=meta, name=name, external_path=external_path)
    doc.objects = {i: objects[i] for i in sorted(objects)}
    doc.groups = {i: groups[i] for i in sorted(groups)}
    doc.chains = {i: chains[i] for i in sorted(chains)}
    doc.connectors = {i: connectors[i] for i in sorted(connectors)}

    next_id = _int(_req(root, "next_id", ""), "next_id")
    used = list(doc.objects) + list(doc.groups) + list(doc.chains) + list(doc.connectors)
    if next_id < 1 or (used and next_id <= max(used)):
        raise SchemaViolation("next_id", "must exceed every entity id in the document")
    doc.next_id = next_id
    return doc


def load_file(path: str) -> SceneDoc:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise SchemaViolation("(document)", f"cannot read project file: {exc}") from None
    return load(data, base_dir=os.path.dirname(os.path.abspath(path)))


# -- clipboard fragments ------------------------------------------------------------


def copy_fragment(doc: SceneDoc, ids: list[int]) -> bytes:
    """Serialize objects (group/chain ids expand to members) as a paste-ready
    fragment. Groups, chains and connectors fully inside the selection are
    kept; references that leave it are dropped, mirroring duplicate()."""
    selection = doc._expand_to_objects(list(ids))
    sel_set = set(selection)
    kept_groups = sorted(
        g for g in doc.groups
        if doc.group_members(g) and set(doc.group_members(g)) <= sel_set
    )
    kept_chains = sorted(
        c for c in doc.chains if set(doc.chains[c].member_ids) <= sel_set
    )
    kept_connectors = sorted(
        c for c in doc.connectors
        if doc.connectors[c].object_a in sel_set and doc.connectors[c].object_b in sel_set
    )

    rows = []
    for obj_id in selection:
        row = _object_json(doc.objects[obj_id])
        if row["group"] not in kept_groups:
            row["group"] = None
        if row["chain"] not in kept_chains:
            row["chain"] = None
            row["chain_index"] = None
        for kf in row["keyframes"]:
            if kf["group"] not in kept_groups:
                kf["group"] = None
        rows.append(row)

    mesh_refs = sorted({doc.objects[i].mesh_ref for i in selection})
    data = {
        "format_version": FORMAT_VERSION,
        "kind": "fragment",
        "meshes": {ref: _mesh_entry_json(doc, ref) for ref in mesh_refs},
        "objects": rows,
        "groups": [{"id": g, "name": doc.groups[g].name} for g in kept_groups],
        "chains": [
            {
                "id": c,
                "members": list(doc.chains[c].member_ids),
                "t_ab": transform_to_json(doc.chains[c].t_ab),
            }
            for c in kept_chains
        ],
        "connectors": [
            {
                "id": c,
                "object_a": doc.connectors[c].object_a,
                "anchor_a": _vec_json(doc.connectors[c].anchor_a),
                "object_b": doc.connectors[c].object_b,
                "anchor_b": _vec_json(doc.connectors[c].anchor_b),
                "rest_length": float(doc.connectors[c].rest_length),
                "stiffness": float(doc.connectors[c].stiffness),
                "display_only": doc.connectors[c].display_only,
            }
            for c in kept_connectors
        ],
    }
    return canonical_json_bytes(data)


def paste_fragment(doc: SceneDoc, data, base_dir: str | None = None) -> list[int]:
    """Materialize a fragment into the document under fresh ids.

    Returns the new object ids in the fragment's object order. Meshes arrive
    by content hash, so pasting into a scene that already has the geometry
    shares the existing asset.
    """
    root = _check_version(_parse_json(data), "fragment")
    meshes, objects, order, groups, chains, connectors = _read_entities(root, base_dir)

    for ref, (mesh, meta, name, external_path) in meshes.items():
        doc.register_mesh(mesh, meta=meta, name=name, external_path=external_path)

    remap: dict[int, int] = {}
    for old_id in order:
        remap[old_id] = doc._alloc_id()
    for old_id in sorted(groups):
        remap[old_id] = doc._alloc_id()
    for old_id in sorted(chains):
        remap[old_id] = doc._alloc_id()
    for old_id in sorted(connectors):
        remap[old_id] = doc._alloc_id()

    for old_id in order:
        src = objects[old_id]
        new_id = remap[old_id]
        doc.objects[new_id] = SceneObject(
            id=new_id,
            name=src.name,
            mesh_ref=src.mesh_ref,
            state=src.state,
            color=src.color,
            group_id=None if src.group_id is None else remap[src.group_id],
            visible=src.visible,
            chain_id=None if src.chain_id is None else remap[src.chain_id],
            chain_index=src.chain_index,
            keyframes=[
                Keyframe(
                    time=kf.time,
                    transform=kf.transform,
                    color=kf.color,
                    group_id=None if kf.group_id is None else remap[kf.group_id],
                    visible=kf.visible,
                )
                for kf in src.keyframes
            ],
        )
    for old_id in sorted(groups):
        doc.groups[remap[old_id]] = Group(id=remap[old_id], name=groups[old_id].name)
    for old_id in sorted(chains):
        src = chains[old_id]
        doc.chains[remap[old_id]] = CrystalChain(
            id=remap[old_id],
            member_ids=[remap[m] for m in src.member_ids],
            t_ab=src.t_ab,
        )
    for old_id in sorted(connectors):
        src = connectors[old_id]
        doc.connectors[remap[old_id]] = SpringConnector(
            id=remap[old_id],
            object_a=remap[src.object_a],
            anchor_a=src.anchor_a,
            object_b=remap[src.object_b],
            anchor_b=src.anchor_b,
            rest_length=src.rest_length,
            stiffness=src.stiffness,
            display_only=src.display_only,
        )
    return [remap[i] for i in order]


# -- animation interchange ------------------------------------------------------------


def export_animation(doc: SceneDoc, fps: float, t0: float, t1: float) -> bytes:
    """Sample every object over [t0, t1] at fps and serialize the frames.

    Frame i is the evaluated scene at t0 + i/fps; the frame count is
    floor((t1 - t0) * fps) + 1, so the final frame never passes t1.
    """
    if isinstance(fps, bool) or not isinstance(fps, (int, float)) or not math.isfinite(fps):
        raise RangeError(f"fps must be a number, got {fps!r}")
    if not 1.0 <= fps <= 240.0:
        raise RangeError(f"fps must lie in [1, 240], got {fps}")
    for name, value in (("t0", t0), ("t1", t1)):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise RangeError(f"{name} must be a number, got {value!r}")
    if not 0.0 <= t0 <= t1 <= doc.duration:
        raise RangeError(
            f"need 0 <= t0 <= t1 <= duration ({doc.duration}), got t0={t0} t1={t1}"
        )

    frame_count = int(math.floor((t1 - t0) * fps)) + 1
    object_ids = sorted(doc.objects)
    tracks: dict[int, list[dict]] = {i: [] for i in object_ids}
    for i in range(frame_count):
        t = min(t0 + i / fps, doc.duration)
        evaluated = doc.evaluate(t)
        for obj_id in object_ids:
            ev = evaluated[obj_id]
            q = quat_canonical(*ev.transform.rotation)
            frame = {
                "rotation": [q.w, q.x, q.y, q.z],
                "translation": _vec_json(ev.transform.translation),
                "visible": ev.visible,
            }
            if isinstance(ev.color, SolidColor):
                frame["rgb"] = [float(c) for c in ev.color]
            else:
                # channel colors resolve per vertex at render time; a flat
                # white placeholder keeps the rgb field always present
                frame["rgb"] = [1.0, 1.0, 1.0]
                frame["color_channel"] = {
                    "channel": ev.color.channel,
                    "colormap": ev.color.colormap,
                }
            tracks[obj_id].append(frame)

    data = {
        "format_version": FORMAT_VERSION,
        "kind": "animation",
        "fps": float(fps),
        "t0": float(t0),
        "t1": float(t1),
        "frame_count": frame_count,
        "light_direction": list(LIGHT_DIRECTION),
        "objects": [
            {"id": i, "name": doc.objects[i].name, "frames": tracks[i]}
            for i in object_ids
        ],
    }
    return canonical_json_bytes(data)
